""" Common type enums for the SMPD digital twin. """
