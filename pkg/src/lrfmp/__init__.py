"""Regularized functional matching pursuit with learnt dictionaries on the sphere."""
