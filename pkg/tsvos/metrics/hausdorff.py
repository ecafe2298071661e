import numpy as np
from scipy import ndimage
from scipy.spatial.distance import directed_hausdorff
from ._masks import as_bool_pair
from .boundary import boundary_pixels
from ..errors import EmptyMaskError

def hausdorff(pred,gt,mode="max"):

	""" hausdorff returns the Hausdorff distance between the boundaries of two masks, in pixels (Euclidean).
		Inputs:
		- pred [Mask or 2-dim array], gt [Mask or 2-dim array]: same shape, both non-empty.
		- mode="max" [str]:
			-> "max": max of the two directed Hausdorff distances.
			-> "hd95": max of the 95th percentiles of the two directed distance sets.
		Outputs:
		- hd [float >= 0]
		Errors:
		- EmptyMaskError if either mask is empty.
		-----------------------------
		This is part of TSVOS"""

	pred,gt=as_bool_pair(pred,gt)
	if not pred.any() or not gt.any():
		raise EmptyMaskError("hausdorff: undefined for an empty mask")
	bp=boundary_pixels(pred)
	bg=boundary_pixels(gt)
	if mode=="max":
		a=np.argwhere(bp).astype(np.float64)
		b=np.argwhere(bg).astype(np.float64)
		return float(max(directed_hausdorff(a,b)[0],directed_hausdorff(b,a)[0]))
	elif mode=="hd95":
		d_pg=ndimage.distance_transform_edt(~bg)[bp]
		d_gp=ndimage.distance_transform_edt(~bp)[bg]
		return float(max(np.percentile(d_pg,95),np.percentile(d_gp,95)))
	raise ValueError("Error at input 'mode': must be 'max' or 'hd95'")
