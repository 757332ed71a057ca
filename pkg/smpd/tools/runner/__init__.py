""" The smpd scenario runner. """
