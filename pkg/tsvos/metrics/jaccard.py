import numpy as np
from ._masks import as_bool_pair

def jaccard(pred,gt):

	""" jaccard returns the region similarity J=|pred & gt|/|pred | gt|.
		Inputs:
		- pred [Mask or 2-dim array]: predicted mask.
		- gt [Mask or 2-dim array]: ground-truth mask, same shape.
		Outputs:
		- jaccard [float in [0,1]]: 1 when both masks are empty.
		-----------------------------
		This is part of TSVOS"""

	pred,gt=as_bool_pair(pred,gt)
	union=np.logical_or(pred,gt).sum()
	if union==0:
		return 1.
	return float(np.logical_and(pred,gt).sum())/float(union)
