import numpy as np

def boundary_pixels(mask):

	""" boundary_pixels returns the boundary of a binary mask: foreground pixels 4-adjacent to a background pixel or to the image edge.
		Inputs:
		- mask [2-dim boolean array]
		Outputs:
		- boundary [2-dim boolean array - same shape]
		-----------------------------
		This is part of TSVOS"""

	padded=np.pad(mask,1,mode="constant",constant_values=False)
	inner=padded[:-2,1:-1] & padded[2:,1:-1] & padded[1:-1,:-2] & padded[1:-1,2:]
	return mask & ~inner
