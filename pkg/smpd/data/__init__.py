""" Packaged schema, default parameters, targets and templates. """
