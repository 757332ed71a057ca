""" Seeded Monte Carlo simulation of the detection, readout and reset cycle. """
