""" Flux tuning models, the four-wave mixing response and the calibration fits. """
