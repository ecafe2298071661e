import numpy as np
from ..errors import ShapeError

def as_bool_pair(pred,gt):
	""" (Mask|array, Mask|array) -> two boolean arrays of the same shape."""
	pred=np.asarray(getattr(pred,"pixels",pred))>0
	gt=np.asarray(getattr(gt,"pixels",gt))>0
	try:
		assert pred.shape==gt.shape and pred.ndim==2
	except AssertionError:
		raise ShapeError("Error at inputs 'pred' and 'gt': masks must be 2-dim with the same shape, got "+str(pred.shape)+" and "+str(gt.shape))
	return pred,gt
