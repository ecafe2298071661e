import math
import logging
import numpy as np
from tqdm import tqdm
from ._masks import as_bool_pair
from .jaccard import jaccard
from .dice import dice
from .boundary_f import boundary_f, default_tolerance
from .hausdorff import hausdorff
from .report import VideoMetrics, MetricReport
from ..errors import EmptyMaskError, ShapeError

logger=logging.getLogger(__name__)


def evaluate_corpus(predictions,gts,config=None,video_ids=None,metadata=None):

	""" evaluate_corpus scores predicted mask sequences against ground truth.
		Frame 0 (the given reference frame) is excluded. Metrics are averaged over the frames of each video, then over videos. J, F, JF, DSC are reported x100, HD in pixels.
		Inputs:
		- predictions [list of mask sequences]: per video, a LabelSet or a sequence of Mask/2-dim arrays (length T).
		- gts [list of mask sequences]: aligned with predictions.
		- config=None [Config]: hd_mode and boundary_tolerance (defaults: 'max', 0.8% of the diagonal).
		- video_ids=None [list of str]
		- metadata=None [dict]: merged into the report metadata (seed, config_hash, name, ...).
		Outputs:
		- report [MetricReport]
		Errors:
		- ShapeError when videos or frames are not aligned.
		-----------------------------
		This is part of TSVOS"""

	hd_mode="max" if config is None else config.hd_mode
	tolerance=None if config is None else config.boundary_tolerance
	try:
		assert len(predictions)==len(gts) and len(gts)>0
	except AssertionError:
		raise ShapeError("evaluate_corpus: %d prediction sequences for %d ground-truth sequences" % (len(predictions),len(gts)))
	if video_ids is None:
		video_ids=["video_%04d" % k for k in range(len(gts))]
	rows=[]
	n_empty=0
	progress=True if config is None else config.progress
	for vid,pred_seq,gt_seq in tqdm(list(zip(video_ids,predictions,gts)),desc="evaluation",disable=not progress):
		pred_seq=list(getattr(pred_seq,"masks",pred_seq))
		gt_seq=list(getattr(gt_seq,"masks",gt_seq))
		try:
			assert len(pred_seq)==len(gt_seq) and len(gt_seq)>=2
		except AssertionError:
			raise ShapeError("evaluate_corpus: video '%s' has %d predictions for %d ground-truth frames" % (vid,len(pred_seq),len(gt_seq)))
		row=evaluate_video(pred_seq,gt_seq,vid,hd_mode,tolerance)
		n_empty+=row.n_empty_hd
		rows.append(row)
	J=float(np.mean([r.J for r in rows]))
	F=float(np.mean([r.F for r in rows]))
	corpus=VideoMetrics("mean",J,F,(J+F)/2.,float(np.mean([r.DSC for r in rows])),float(np.mean([r.HD for r in rows])),
		sum(r.n_frames for r in rows),n_empty)
	if n_empty:
		logger.warning("%d evaluated frame(s) had an empty mask; their HD was set to the image diagonal",n_empty)
	meta=dict(n_videos=len(rows),n_empty_hd=n_empty,hd_mode=hd_mode)
	if metadata:
		meta.update(metadata)
	return MetricReport(tuple(rows),corpus,meta)



def evaluate_video(pred_seq,gt_seq,video_id="",hd_mode="max",tolerance=None):
	""" Per-frame J, F, DSC, HD over frames 1..T-1, averaged; scores x100."""
	js=[]
	fs=[]
	ds=[]
	hs=[]
	n_empty=0
	for pred,gt in zip(pred_seq[1:],gt_seq[1:]):
		p,g=as_bool_pair(pred,gt)
		js.append(jaccard(p,g))
		fs.append(boundary_f(p,g,tolerance if tolerance is not None else default_tolerance(p.shape)))
		ds.append(dice(p,g))
		try:
			hs.append(hausdorff(p,g,hd_mode))
		except EmptyMaskError:
			hs.append(math.hypot(*p.shape))
			n_empty+=1
	J=100.*float(np.mean(js))
	F=100.*float(np.mean(fs))
	return VideoMetrics(video_id,J,F,(J+F)/2.,100.*float(np.mean(ds)),float(np.mean(hs)),len(js),n_empty)
