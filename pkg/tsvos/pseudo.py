""" Quadro-inference pseudo labelling: four rollouts of the teacher (forward and reverse from each of
the two labeled frames), merged per frame into the LabelSet of the full video.
-----------------------------
This is part of TSVOS"""

import json
import logging
import numpy as np
import torch
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from tqdm import tqdm
from .core import LabelSet, Provenance, Stream, Direction, binarize, validate_video
from .errors import CoverageError, AggregateError
from .model import traversal, load_checkpoint, read_checkpoint_header, CHECKPOINT_FORMAT
from .metrics.jaccard import jaccard

logger=logging.getLogger(__name__)

# stream -> (uses t1?, direction)
STREAMS={
	Stream.FWD_T1:(True,Direction.FORWARD),
	Stream.REV_T1:(True,Direction.REVERSE),
	Stream.FWD_T2:(False,Direction.FORWARD),
	Stream.REV_T2:(False,Direction.REVERSE),
}


@dataclass(frozen=True,eq=False)
class StreamPrediction:

	""" Probability maps of one rollout. 'frame_indices' and 'probs' are aligned, in traversal order."""

	stream: Stream
	reference_index: int
	frame_indices: tuple
	probs: tuple

	def prob_at(self,t):
		return self.probs[self.frame_indices.index(t)]



class OracleTeacher:

	""" Stand-in teacher whose rollouts return the ground-truth masks (hidden ones included) as probabilities. Used to check the pseudo-label plumbing independently of learning."""

	kind="oracle"

	def rollout(self,video,reference,direction,memory_every=None):
		index,_=reference
		probs=[]
		for t in traversal(video.T,index,direction):
			mask=video.reference_mask(t)
			if mask is None:
				raise CoverageError("oracle teacher: video '%s' has no ground truth for frame %d" % (video.video_id,t))
			probs.append(mask.pixels.astype(np.float64))
		return probs



def stream_coverage(stream,t1,t2,T):
	use_t1,direction=STREAMS[stream]
	return traversal(T,t1 if use_t1 else t2,direction)



def quadro_inference(video,teacher):

	""" quadro_inference runs the teacher four times on a video: forward and reverse from t1, forward and reverse from t2, each seeded with the ground-truth mask of its reference frame.
		Inputs:
		- video [VideoSample]: validated, labels of t1 and t2 available.
		- teacher [ModelState or OracleTeacher]: anything with a rollout(video,reference,direction) method.
		Outputs:
		- streams [list of 4 StreamPrediction]: order FwdT1, RevT1, FwdT2, RevT2. A stream may cover no frame.
		-----------------------------
		This is part of TSVOS"""

	validate_video(video)
	t1,t2=video.labeled_indices
	streams=[]
	for stream,(use_t1,direction) in STREAMS.items():
		ref=t1 if use_t1 else t2
		probs=teacher.rollout(video,(ref,video.supervision_mask(ref)),direction)
		indices=tuple(traversal(video.T,ref,direction))
		streams.append(StreamPrediction(stream,ref,indices,tuple(probs)))
	return streams



def select_stream(t,t1,t2,T):

	""" select_stream returns the stream used for frame t under the temporal rule: among the streams covering t, the one whose reference is closest in time; ties go to t1's stream. None for labeled frames.
		Depends on (t,t1,t2,T) only, never on the predictions.
		-----------------------------
		This is part of TSVOS"""

	if t in (t1,t2):
		return None
	candidates=[s for s in STREAMS if t in stream_coverage(s,t1,t2,T)]
	if not candidates:
		raise CoverageError("frame %d is covered by no stream (t1=%d, t2=%d, T=%d)" % (t,t1,t2,T))
	return min(candidates,key=lambda s: (abs(t-(t1 if STREAMS[s][0] else t2)),0 if STREAMS[s][0] else 1))



def _select_overlap(t,t1,t2,T,by_stream,video,threshold):
	# mask-space distance: 1 - IoU between the prediction and the reference mask of its stream
	candidates=[s for s in STREAMS if t in by_stream[s].frame_indices]
	if len(candidates)<2:
		return select_stream(t,t1,t2,T)
	scores={}
	for s in candidates:
		pred=binarize(by_stream[s].prob_at(t),threshold)
		ref=video.supervision_mask(by_stream[s].reference_index)
		scores[s]=1.-jaccard(pred,ref)
	best=min(scores.values())
	tied=[s for s in candidates if scores[s]==best]
	if len(tied)==1:
		return tied[0]
	return select_stream(t,t1,t2,T)



def merge_streams(video,streams,threshold=0.5,rule="temporal"):

	""" merge_streams builds the LabelSet of a video from its four stream predictions.
		Inputs:
		- video [VideoSample]
		- streams [list of StreamPrediction]: output of quadro_inference on this video.
		- threshold=0.5 [float]: binarization threshold, applied once after selection.
		- rule="temporal" [str]:
			-> "temporal": stream whose reference is closest in time (ties to t1).
			-> "overlap": stream whose prediction is closest (1-IoU) to its reference mask; falls back to "temporal" on ties or single coverage.
		Outputs:
		- labelset [LabelSet]: GroundTruth at t1,t2 (their masks unchanged), Pseudo elsewhere with its source stream.
		Errors:
		- CoverageError if a frame is covered by no stream.
		-----------------------------
		This is part of TSVOS"""

	t1,t2=video.labeled_indices
	T=video.T
	by_stream={p.stream:p for p in streams}
	masks=[]
	provenance=[]
	source=[]
	for t in range(T):
		if t in (t1,t2):
			masks.append(video.supervision_mask(t))
			provenance.append(Provenance.GROUND_TRUTH)
			source.append(None)
			continue
		if rule=="overlap":
			stream=_select_overlap(t,t1,t2,T,by_stream,video,threshold)
		else:
			stream=select_stream(t,t1,t2,T)
		if stream not in by_stream or t not in by_stream[stream].frame_indices:
			raise CoverageError("video '%s': frame %d, stream %s has no prediction" % (video.video_id,t,stream.value))
		masks.append(binarize(by_stream[stream].prob_at(t),threshold))
		provenance.append(Provenance.PSEUDO)
		source.append(stream)
	return LabelSet(tuple(masks),tuple(provenance),tuple(source)).check((t1,t2))



def pseudo_label_dataset(videos,teacher,config=None,workers=0):

	""" pseudo_label_dataset runs quadro_inference and merge_streams over a corpus.
		Inputs:
		- videos [list of VideoSample]
		- teacher [ModelState or OracleTeacher]: read-only during this stage.
		- config=None [Config]: threshold, merge rule and progress bar; the teacher's config if None.
		- workers=0 [int]: >0 labels videos in a thread pool (output order is kept).
		Outputs:
		- labelsets [list of LabelSet]: one per video, same order.
		Errors:
		- AggregateError listing (video_id, error) for every failed video.
		-----------------------------
		This is part of TSVOS"""

	if config is None:
		config=teacher.config
	def label(video):
		try:
			return merge_streams(video,quadro_inference(video,teacher),config.threshold,config.merge_rule),None
		except Exception as err:
			return None,err
	if workers>0:
		with ThreadPoolExecutor(max_workers=workers) as pool:
			results=list(tqdm(pool.map(label,videos),total=len(videos),desc="quadro-inference",disable=not config.progress))
	else:
		results=[label(v) for v in tqdm(videos,desc="quadro-inference",disable=not config.progress)]
	errors=[(v.video_id,err) for v,(_,err) in zip(videos,results) if err is not None]
	if errors:
		raise AggregateError(errors)
	labelsets=[ls for ls,_ in results]
	stats=provenance_stats(labelsets)
	logger.info("pseudo labels: %d videos, %.1f%% ground truth, %.1f%% pseudo",len(labelsets),100.*stats["ground_truth_fraction"],100.*stats["pseudo_fraction"])
	return labelsets



def provenance_stats(labelsets):
	""" Fractions of GroundTruth / Pseudo frames and the per-stream selection histogram."""
	n=sum(len(ls) for ls in labelsets)
	n_gt=sum(p is Provenance.GROUND_TRUTH for ls in labelsets for p in ls.provenance)
	histogram=Counter(s.value for ls in labelsets for s in ls.source_stream if s is not None)
	return dict(frames=n,ground_truth=n_gt,pseudo=n-n_gt,ground_truth_fraction=n_gt/float(max(n,1)),
		pseudo_fraction=(n-n_gt)/float(max(n,1)),streams={s.value:histogram.get(s.value,0) for s in Stream})



def save_oracle_checkpoint(path):
	""" Writes a checkpoint that load_teacher turns into an OracleTeacher (no parameters)."""
	header=dict(format=CHECKPOINT_FORMAT,kind=OracleTeacher.kind)
	torch.save(dict(header=json.dumps(header,sort_keys=True)),path)



def load_teacher(path,config=None):

	""" load_teacher reads a teacher checkpoint: a trained ModelState, or an OracleTeacher for oracle checkpoints.
		Errors:
		- FileNotFoundError if 'path' does not exist.
		-----------------------------
		This is part of TSVOS"""

	header,_=read_checkpoint_header(path)
	if header.get("kind")==OracleTeacher.kind:
		logger.info("%s is an oracle checkpoint: pseudo labels are the ground truth",path)
		return OracleTeacher()
	return load_checkpoint(path,config)
