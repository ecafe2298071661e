import numpy as np
from ._masks import as_bool_pair

def dice(pred,gt):

	""" dice returns the Dice score DSC=2|pred & gt|/(|pred|+|gt|), 1 when both masks are empty. DSC=2J/(1+J).
		-----------------------------
		This is part of TSVOS"""

	pred,gt=as_bool_pair(pred,gt)
	total=pred.sum()+gt.sum()
	if total==0:
		return 1.
	return 2.*float(np.logical_and(pred,gt).sum())/float(total)
