""" Domain types and closed-form figures of merit of the SMPD. """
