"""Approximate deconvolution MHD on the periodic 3-torus."""
