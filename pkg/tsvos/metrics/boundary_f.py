import math
from scipy import ndimage
from ._masks import as_bool_pair
from .boundary import boundary_pixels

def default_tolerance(shape):
	""" 0.8% of the image diagonal, rounded up (1 px at 64x64)."""
	return float(math.ceil(0.008*math.hypot(shape[0],shape[1])))



def boundary_f(pred,gt,tolerance=None):

	""" boundary_f returns the contour accuracy F (boundary F-measure).
		Precision = fraction of predicted boundary pixels lying within 'tolerance' (Euclidean, inclusive) of a ground-truth boundary pixel; recall = the same with the roles swapped; F=2PR/(P+R).
		Inputs:
		- pred [Mask or 2-dim array], gt [Mask or 2-dim array]: same shape.
		- tolerance=None [float]: in pixels; None means default_tolerance(shape).
		Outputs:
		- F [float in [0,1]]: 1 if both boundaries are empty, 0 if P+R=0.
		-----------------------------
		This is part of TSVOS"""

	pred,gt=as_bool_pair(pred,gt)
	if tolerance is None:
		tolerance=default_tolerance(pred.shape)
	bp=boundary_pixels(pred)
	bg=boundary_pixels(gt)
	n_p=bp.sum()
	n_g=bg.sum()
	if n_p==0 and n_g==0:
		return 1.
	if n_p==0 or n_g==0:
		return 0.
	# distance of every pixel to the nearest boundary pixel of the other mask
	dist_to_gt=ndimage.distance_transform_edt(~bg)
	dist_to_pred=ndimage.distance_transform_edt(~bp)
	precision=float((dist_to_gt[bp]<=tolerance).sum())/float(n_p)
	recall=float((dist_to_pred[bg]<=tolerance).sum())/float(n_g)
	if precision+recall==0.:
		return 0.
	return 2.*precision*recall/(precision+recall)
