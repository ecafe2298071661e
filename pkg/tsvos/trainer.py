""" Training paradigm: supervised teacher on two labeled frames per video (stage 1), quadro-inference
pseudo labelling (stage 2, see pseudo.py) and student re-training with source-dependent augmentation
(stage 3). Also the fully-supervised and vanilla two-shot reference modes, evaluation and the ablation chain.
-----------------------------
This is part of TSVOS"""

import os
import json
import time
import logging
import numpy as np
import torch
from collections import Counter
from dataclasses import dataclass, asdict
from tqdm import trange
from .core import LabelSet, Provenance, Source, Direction, VideoSample, binarize, validate_video
from .config import config_hash, with_overrides
from .errors import ShapeError, DivergenceError, LabelAuditError
from .model import init_state, read_memory, save_checkpoint, load_checkpoint
from .stcs import stcs_batch_loss, sample_stcs_indices
from .augment import make_pair, weak_augment, sda, STRONG_OPS
from .pseudo import pseudo_label_dataset, provenance_stats
from .data import DatasetManifest, read_manifest, load_dataset, load_labelsets, save_labelset, write_manifest, label_fraction, MANIFEST_NAME
from .metrics import evaluate_corpus

logger=logging.getLogger(__name__)

EPS=1e-7
# number of trailing iterations averaged into the final losses of a StageReport
FINAL_WINDOW=50


@dataclass(frozen=True,eq=False)
class TrainBatch:

	""" One training batch. Per item: three frames of one video in increasing time order (memory frame, intermediate, query) with their masks and sources, plus the raw frames (t, t+1, tau) of the space-time consistency term.
		- frames, masks [numpy arrays (B,3,H,W)]
		- indices [tuple of (a,b,c)]
		- sources [tuple of 3-tuples of Source]
		- applied_ops [tuple of 3-tuples of op lists]
		- stcs_frames [numpy array (B,3,H,W) or None], stcs_indices [tuple of (t,tau) or None]"""

	frames: np.ndarray
	masks: np.ndarray
	indices: tuple
	video_ids: tuple
	sources: tuple
	applied_ops: tuple
	stcs_frames: np.ndarray=None
	stcs_indices: tuple=None

	def strong_op_count(self,source=None):
		n=0
		for srcs,ops in zip(self.sources,self.applied_ops):
			for s,slot_ops in zip(srcs,ops):
				if source is None or s is source:
					n+=sum(name in STRONG_OPS for name,_ in slot_ops)
		return n



@dataclass
class StageReport:
	stage: str
	iterations: int
	loss_seg: float
	loss_pcl: float
	initial_loss_seg: float
	wall_time: float
	seed: int
	config_hash: str
	checkpoint: str=None
	labels_read: int=0

	def to_dict(self):
		return asdict(self)

	def write_json(self,path):
		with open(path,"w") as f:
			json.dump(self.to_dict(),f,sort_keys=True,indent=1)

	@classmethod
	def from_dict(cls,data):
		return cls(**data)



def read_stage_report(path):
	with open(path,"r") as f:
		return StageReport.from_dict(json.load(f))



class LabelAudit:

	""" Records every (video_id, frame) whose mask is read into a loss term. With 'allowed' set, reading any other frame raises LabelAuditError."""

	def __init__(self,allowed=None):
		self.allowed=allowed
		self.reads=set()
		self.count=0

	def read(self,video,t):
		if self.allowed is not None and t not in self.allowed.get(video.video_id,()):
			raise LabelAuditError("video '%s': frame %d is not one of the labeled frames %s" % (video.video_id,t,str(sorted(self.allowed.get(video.video_id,())))))
		mask=video.supervision_mask(t)
		self.reads.add((video.video_id,t))
		self.count+=1
		return mask

	def per_video(self):
		return Counter(vid for vid,_ in self.reads)



def bootstrap_triplet(t1,t2,rng):

	""" bootstrap_triplet resamples the two labeled frames into a sorted triplet: (t1,t1,t2) or (t1,t2,t2) with probability 1/2 each."""

	try:
		assert t1<t2
	except AssertionError:
		raise IndexError("Error at inputs 't1','t2': must satisfy t1 < t2")
	if rng.random()<0.5:
		return (t1,t1,t2)
	return (t1,t2,t2)



def sample_triplet(T,max_gap,rng):

	""" sample_triplet draws three strictly increasing frame indices a<b<c of a fully labelled video with c-a <= max_gap.
		Inputs:
		- T [int]: >= 3.
		- max_gap [int]: >= 2.
		- rng [numpy Generator]
		Outputs:
		- (a, b, c) [ints]
		-----------------------------
		This is part of TSVOS"""

	try:
		assert T>=3 and max_gap>=2
	except AssertionError:
		raise ValueError("Error at inputs 'T','max_gap': need T >= 3 and max_gap >= 2")
	a=int(rng.integers(0,T-2))
	last=min(a+max_gap,T-1)
	b,c=sorted(int(x) for x in rng.choice(np.arange(a+1,last+1),2,replace=False))
	return (a,b,c)



def seg_loss(probs,masks):

	""" seg_loss is the mean per-pixel binary cross-entropy, probabilities clamped to [1e-7, 1-1e-7].
		Inputs:
		- probs [tensor]: predicted lesion probabilities.
		- masks [tensor]: targets in {0,1}, same shape.
		Outputs:
		- loss [scalar tensor]
		-----------------------------
		This is part of TSVOS"""

	try:
		assert probs.shape==masks.shape
	except AssertionError:
		raise ShapeError("Error at inputs 'probs','masks': shapes %s and %s differ" % (tuple(probs.shape),tuple(masks.shape)))
	masks=masks.to(probs.dtype)
	p=probs.clamp(EPS,1.-EPS)
	return -(masks*torch.log(p)+(1.-masks)*torch.log(1.-p)).mean()



def _as_tensor(x,state):
	return torch.from_numpy(np.ascontiguousarray(x)).to(dtype=state.dtype,device=state.device).unsqueeze(2)



def triplet_forward(state,frames,masks):

	""" triplet_forward is the STCN-style training pass: slot 0 (frame + mask) is the memory that segments slot 1; slot 1 with its soft prediction joins the memory to segment slot 2.
		Inputs:
		- state [ModelState]
		- frames [tensor (B,3,1,H,W)]
		- masks [tensor (B,3,1,H,W)]: only slot 0 is read.
		Outputs:
		- probs [tensor (B,2,1,H,W)]: predictions for slots 1 and 2.
		-----------------------------
		This is part of TSVOS"""

	net=state.network
	B=frames.shape[0]
	keys=net.key(frames.flatten(0,1))
	keys=keys.view(B,3,keys.shape[1],keys.shape[2])
	v0=net.value(frames[:,0],masks[:,0])
	_,v_q=read_memory(keys[:,1],keys[:,0],v0)
	p1=net.decode(v_q,frames[:,1])
	v1=net.value(frames[:,1],p1)
	_,v_q=read_memory(keys[:,2],torch.cat([keys[:,0],keys[:,1]],1),torch.cat([v0,v1],1))
	p2=net.decode(v_q,frames[:,2])
	return torch.stack([p1,p2],1)



def batch_loss(state,batch,lambda_pcl,use_stcs,mean_outside_log=False):

	""" batch_loss returns (total, L_seg, L_pcl) with total = L_seg + lambda_pcl*L_pcl. Without STCS, L_pcl is None and total is L_seg."""

	frames=_as_tensor(batch.frames,state)
	masks=_as_tensor(batch.masks,state)
	probs=triplet_forward(state,frames,masks)
	l_seg=seg_loss(probs,masks[:,1:])
	if not use_stcs or batch.stcs_frames is None:
		return l_seg,l_seg,None
	stcs_frames=_as_tensor(batch.stcs_frames,state)
	B=stcs_frames.shape[0]
	keys=state.network.key(stcs_frames.flatten(0,1))
	keys=keys.view(B,3,keys.shape[1],keys.shape[2])
	l_pcl=stcs_batch_loss(keys[:,0],keys[:,1],keys[:,2],mean_outside_log,state.config.pcl_temperature)
	return l_seg+lambda_pcl*l_pcl,l_seg,l_pcl



def _stcs_part(videos,rng):
	stcs_frames=[]
	stcs_indices=[]
	for video in videos:
		t,tau=sample_stcs_indices(video.T,rng)
		stcs_frames.append([video.frames[k].pixels for k in (t,t+1,tau)])
		stcs_indices.append((t,tau))
	return np.asarray(stcs_frames,dtype=np.float64),tuple(stcs_indices)



def build_stage1_batch(videos,audit,batch_rng,aug_rng,config,stcs_rng=None):

	""" build_stage1_batch samples config.batch_size videos, bootstraps each labeled pair into a triplet and weak-augments every slot independently. Masks are read through 'audit' only."""

	chosen=[videos[int(k)] for k in batch_rng.integers(0,len(videos),size=config.batch_size)]
	frames=[]
	masks=[]
	indices=[]
	ops=[]
	for video in chosen:
		t1,t2=video.labeled_indices
		triplet=bootstrap_triplet(t1,t2,batch_rng)
		f_item=[]
		m_item=[]
		o_item=[]
		for t in triplet:
			pair=weak_augment(video.frames[t],audit.read(video,t),aug_rng,config,Source.LABELED)
			f_item.append(pair.frame.pixels)
			m_item.append(pair.mask.pixels)
			o_item.append(pair.applied_ops)
		frames.append(f_item)
		masks.append(m_item)
		indices.append(triplet)
		ops.append(tuple(o_item))
	stcs_frames,stcs_indices=_stcs_part(chosen,stcs_rng) if stcs_rng is not None else (None,None)
	return TrainBatch(np.asarray(frames,dtype=np.float64),np.asarray(masks,dtype=np.float64),tuple(indices),
		tuple(v.video_id for v in chosen),tuple((Source.LABELED,)*3 for _ in chosen),tuple(ops),stcs_frames,stcs_indices)



def build_stage3_batch(videos,labelsets,batch_rng,aug_rng,config,stcs_rng=None):

	""" build_stage3_batch samples config.batch_size videos, a triplet per video across the full sequence, and routes every slot through sda by the provenance of its label (weak only when config.use_sda is False). The CutMix partner of a slot is the same slot of the next batch item."""

	picks=[int(k) for k in batch_rng.integers(0,len(videos),size=config.batch_size)]
	chosen=[videos[k] for k in picks]
	triplets=[sample_triplet(v.T,config.max_gap,batch_rng) for v in chosen]
	pairs=[]
	for k,video,triplet in zip(picks,chosen,triplets):
		ls=labelsets[k]
		pairs.append([make_pair(video.frames[t],ls.masks[t],Source.LABELED if ls.provenance[t] is Provenance.GROUND_TRUTH else Source.PSEUDO) for t in triplet])
	frames=[]
	masks=[]
	sources=[]
	ops=[]
	B=len(chosen)
	for i in range(B):
		f_item=[]
		m_item=[]
		o_item=[]
		for s in range(3):
			pair=pairs[i][s]
			if config.use_sda:
				out=sda(pair,aug_rng,pairs[(i+1)%B][s],config)
			else:
				out=weak_augment(pair.frame,pair.mask,aug_rng,config,pair.source)
			f_item.append(out.frame.pixels)
			m_item.append(out.mask.pixels)
			o_item.append(out.applied_ops)
		frames.append(f_item)
		masks.append(m_item)
		sources.append(tuple(p.source for p in pairs[i]))
		ops.append(tuple(o_item))
	stcs_frames,stcs_indices=_stcs_part(chosen,stcs_rng) if stcs_rng is not None else (None,None)
	return TrainBatch(np.asarray(frames,dtype=np.float64),np.asarray(masks,dtype=np.float64),tuple(triplets),
		tuple(v.video_id for v in chosen),tuple(sources),tuple(ops),stcs_frames,stcs_indices)



def _rng_streams(seed,stage):
	# batch sampling, augmentation, STCS index sampling
	return [np.random.default_rng(s) for s in np.random.SeedSequence([seed,stage]).spawn(3)]



def _optimize(state,make_batch,iterations,use_stcs,config,stage):
	losses_seg=[]
	losses_pcl=[]
	t0=time.time()
	state.network.train()
	bar=trange(iterations,desc=stage,disable=not config.progress)
	for it in bar:
		batch=make_batch()
		state.optimizer.zero_grad()
		total,l_seg,l_pcl=batch_loss(state,batch,config.lambda_pcl,use_stcs,config.pcl_mean_outside_log)
		if not torch.isfinite(total):
			raise DivergenceError("%s: non-finite loss at iteration %d" % (stage,state.iteration))
		total.backward()
		state.optimizer.step()
		state.iteration+=1
		losses_seg.append(l_seg.item())
		losses_pcl.append(0. if l_pcl is None else l_pcl.item())
		if it%50==0:
			bar.set_postfix(seg="%.4f" % losses_seg[-1],pcl="%.4f" % losses_pcl[-1])
	state.network.eval()
	return losses_seg,losses_pcl,time.time()-t0



def _report(stage,losses_seg,losses_pcl,wall,state,config,labels_read=0):
	report=StageReport(stage=stage,iterations=len(losses_seg),loss_seg=float(np.mean(losses_seg[-FINAL_WINDOW:])),
		loss_pcl=float(np.mean(losses_pcl[-FINAL_WINDOW:])),initial_loss_seg=losses_seg[0],wall_time=wall,
		seed=state.seed,config_hash=config_hash(config),labels_read=labels_read)
	logger.info("%s: %d iterations, L_seg %.4f (initial %.4f), L_pcl %.4f, %.1f s",stage,report.iterations,report.loss_seg,
		report.initial_loss_seg,report.loss_pcl,wall)
	return report



def train_stage1(videos,config,audit=None,iterations=None):

	""" train_stage1 trains the teacher on the two labeled frames of every video (bootstrapped to triplets, weak augmentation) plus, when config.use_stcs, lambda_pcl times the space-time consistency loss on freely sampled frames.
		Inputs:
		- videos [list of VideoSample]: training videos; only their labeled_indices are ever read for supervision.
		- config [Config]
		- audit=None [LabelAudit]: created if None, restricted to the labeled frames.
		- iterations=None [int]: defaults to config.iterations_stage1.
		Outputs:
		- teacher [ModelState]
		- report [StageReport]: labels_read = number of distinct masks read into the loss.
		Errors:
		- DivergenceError if the loss becomes non-finite.
		- LabelAuditError if a mask other than the two labeled ones is requested.
		-----------------------------
		This is part of TSVOS"""

	for video in videos:
		validate_video(video)
	if audit is None:
		audit=LabelAudit({v.video_id:set(v.labeled_indices) for v in videos})
	if iterations is None:
		iterations=config.iterations_stage1
	state=init_state(config,config.teacher_width,config.rng_seed)
	batch_rng,aug_rng,stcs_rng=_rng_streams(config.rng_seed,1)
	use_stcs=config.use_stcs
	make_batch=lambda: build_stage1_batch(videos,audit,batch_rng,aug_rng,config,stcs_rng if use_stcs else None)
	losses_seg,losses_pcl,wall=_optimize(state,make_batch,iterations,use_stcs,config,"stage1")
	report=_report("stage1",losses_seg,losses_pcl,wall,state,config,len(audit.reads))
	state.report=report
	return state,report



def train_vanilla(videos,config,audit=None,iterations=None):
	""" Two-shot baseline: stage 1 without STCS, no pseudo labels, no re-training."""
	state,report=train_stage1(videos,with_overrides(config,use_stcs=False),audit,iterations)
	report.stage="vanilla"
	return state,report



def _labelset_list(videos,labelsets):
	if isinstance(labelsets,dict):
		labelsets=[labelsets[v.video_id] for v in videos]
	try:
		assert len(labelsets)==len(videos)
	except AssertionError:
		raise ShapeError("Error at input 'labelsets': one LabelSet per video is required")
	for video,ls in zip(videos,labelsets):
		try:
			assert len(ls)==video.T
		except AssertionError:
			raise ShapeError("video '%s': LabelSet covers %d of %d frames" % (video.video_id,len(ls),video.T))
	return list(labelsets)



def train_stage3(videos,labelsets,teacher_or_none,config,iterations=None,stage="stage3"):

	""" train_stage3 trains the student on fully labelled videos (ground truth and pseudo labels), every frame routed through source-dependent augmentation.
		Inputs:
		- videos [list of VideoSample]
		- labelsets [list of LabelSet aligned with videos, or dict video_id -> LabelSet]: must cover every frame.
		- teacher_or_none [ModelState or None]: copied into the student only when config.student_warm_start (and the widths agree).
		- config [Config]: use_sda, max_gap, stcs_in_stage3, student_width.
		- iterations=None [int]: defaults to config.iterations_stage3.
		- stage="stage3" [str]: name used in the report.
		Outputs:
		- student [ModelState]
		- report [StageReport]
		Errors:
		- DivergenceError if the loss becomes non-finite.
		-----------------------------
		This is part of TSVOS"""

	labelsets=_labelset_list(videos,labelsets)
	if iterations is None:
		iterations=config.iterations_stage3
	state=init_state(config,config.student_width,config.rng_seed+1)
	if config.student_warm_start and teacher_or_none is not None:
		if teacher_or_none.width==state.width:
			state.network.load_state_dict(teacher_or_none.network.state_dict())
		else:
			logger.warning("warm start skipped: teacher width %d differs from student width %d",teacher_or_none.width,state.width)
	batch_rng,aug_rng,stcs_rng=_rng_streams(config.rng_seed,3)
	use_stcs=config.use_stcs and config.stcs_in_stage3
	make_batch=lambda: build_stage3_batch(videos,labelsets,batch_rng,aug_rng,config,stcs_rng if use_stcs else None)
	losses_seg,losses_pcl,wall=_optimize(state,make_batch,iterations,use_stcs,config,stage)
	report=_report(stage,losses_seg,losses_pcl,wall,state,config)
	state.report=report
	return state,report



def ground_truth_labelset(video):
	""" LabelSet made of the available ground truth of every frame (LabelAuditError if one is missing)."""
	T=video.T
	return LabelSet(tuple(video.supervision_mask(t) for t in range(T)),(Provenance.GROUND_TRUTH,)*T,(None,)*T)



def reveal(video):
	""" Copy of a video whose hidden labels are made available (fully-supervised reference on synthetic data)."""
	masks=video.full_masks()
	if masks is None:
		raise LabelAuditError("video '%s': some frame has no ground truth at all" % video.video_id)
	return VideoSample(video.frames,tuple(masks),video.labeled_indices,video.video_id,video.split,None)



def train_fully_supervised(videos,config,iterations=None):

	""" train_fully_supervised is stage 3 run on all-GroundTruth labelsets (hence weak augmentation only).
		Outputs:
		- state [ModelState]: state.report holds the StageReport.
		-----------------------------
		This is part of TSVOS"""

	labelsets=[ground_truth_labelset(v) for v in videos]
	state,_=train_stage3(videos,labelsets,None,config,iterations,"full")
	return state



def predict_video(state,video):
	""" First-frame-referenced forward rollout: [reference mask]+binarized predictions for frames 1..T-1."""
	reference=video.reference_mask(0)
	probs=state.rollout(video,(0,reference),Direction.FORWARD)
	return [reference]+[binarize(p,state.config.threshold) for p in probs]



def evaluate_model(state,videos,config=None,metadata=None,return_predictions=False):

	""" evaluate_model segments every video from its first-frame ground truth and scores frames 1..T-1.
		Inputs:
		- state [ModelState]
		- videos [list of VideoSample]: every frame needs ground truth (test split).
		- config=None [Config]: evaluation settings, defaults to state.config.
		- metadata=None [dict]: added to the report metadata.
		- return_predictions=False [bool]: also return the predicted mask sequences.
		Outputs:
		- report [MetricReport] (, predictions [list of lists of Mask])
		-----------------------------
		This is part of TSVOS"""

	if config is None:
		config=state.config
	predictions=[predict_video(state,v) for v in videos]
	gts=[v.full_masks() for v in videos]
	try:
		assert all(g is not None for g in gts)
	except AssertionError:
		raise LabelAuditError("evaluate_model: every evaluated frame needs ground truth")
	meta=dict(seed=state.seed,config_hash=config_hash(config))
	if metadata:
		meta.update(metadata)
	report=evaluate_corpus(predictions,gts,config,[v.video_id for v in videos],meta)
	if return_predictions:
		return report,predictions
	return report



def persist_stage(state,report,directory,name):
	""" Writes <directory>/<name> (checkpoint) and <directory>/report.json; returns the report with its checkpoint path."""
	os.makedirs(directory,exist_ok=True)
	path=os.path.join(directory,name)
	save_checkpoint(state,path,report.config_hash)
	report.checkpoint=path
	report.write_json(os.path.join(directory,"report.json"))
	logger.info("%s checkpoint written to %s",report.stage,path)
	return report



def _resume(directory,name,config):
	path=os.path.join(directory,name)
	report_path=os.path.join(directory,"report.json")
	if not (os.path.isfile(path) and os.path.isfile(report_path)):
		return None,None
	report=read_stage_report(report_path)
	if report.config_hash!=config_hash(config):
		logger.warning("%s was produced with config %s (current %s); it is reused anyway",path,report.config_hash,config_hash(config))
	logger.info("resuming from %s",path)
	state=load_checkpoint(path,config)
	state.report=report
	return state,report



def run_pipeline(corpus,config,out_dir,teacher=None,workers=None):

	""" run_pipeline chains stage 1, quadro-inference pseudo labelling and stage 3, persisting each stage under out_dir:
			stage1/teacher.pt, stage1/report.json
			pseudo/manifest.json (+ pseudo/<video_id>/pseudo/%04d.png)
			stage3/student.pt, stage3/report.json
		A stage whose artifacts exist is loaded instead of recomputed.
		Inputs:
		- corpus [DatasetManifest or str]: two-shot manifest (train split used).
		- config [Config]
		- out_dir [str]
		- teacher=None [ModelState or OracleTeacher]: skips stage 1 when given.
		- workers=None [int]: pseudo-labelling workers, defaults to config.workers.
		Outputs:
		- student [ModelState]
		- reports [dict]: 'stage1' and 'stage3' StageReports (stage1 absent with an external teacher), 'pseudo' provenance statistics.
		Errors:
		- AggregateError from pseudo labelling, DivergenceError from training.
		-----------------------------
		This is part of TSVOS"""

	manifest=corpus if isinstance(corpus,DatasetManifest) else read_manifest(corpus)
	videos=load_dataset(manifest,"train")
	if workers is None:
		workers=config.workers
	reports={}
	stage1_dir=os.path.join(out_dir,"stage1")
	if teacher is None:
		teacher,report=_resume(stage1_dir,"teacher.pt",config)
		if teacher is None:
			teacher,report=train_stage1(videos,config)
			report=persist_stage(teacher,report,stage1_dir,"teacher.pt")
		reports["stage1"]=report
	pseudo_dir=os.path.join(out_dir,"pseudo")
	pseudo_manifest=os.path.join(pseudo_dir,MANIFEST_NAME)
	if os.path.isfile(pseudo_manifest):
		logger.info("resuming from %s",pseudo_manifest)
		by_id=load_labelsets(pseudo_manifest)
		labelsets=[by_id[v.video_id] for v in videos]
	else:
		labelsets=pseudo_label_dataset(videos,teacher,config,workers)
		updated=manifest
		for video,ls in zip(videos,labelsets):
			updated=save_labelset(video.video_id,ls,updated,pseudo_dir)
		write_manifest(updated,pseudo_manifest)
	reports["pseudo"]=provenance_stats(labelsets)
	stage3_dir=os.path.join(out_dir,"stage3")
	student,report=_resume(stage3_dir,"student.pt",config)
	if student is None:
		student,report=train_stage3(videos,labelsets,teacher if hasattr(teacher,"network") else None,config)
		report=persist_stage(student,report,stage3_dir,"student.pt")
	reports["stage3"]=report
	return student,reports



def run_ablation(corpus,config,out_dir,include_full=True):

	""" run_ablation trains the rows of the ablation chain on the train split and evaluates them on the test split:
			"Baseline"            vanilla two-shot (no STCS, no re-training)
			"Baseline+STCS"       stage-1 teacher with STCS
			"Baseline+STCS+SDA"   full pipeline (student)
			"Fully supervised"    every training label revealed (include_full)
		Outputs:
		- reports [dict name -> MetricReport]: metadata carries name and label_fraction. Each report is also written to out_dir/<slug>.json.
		-----------------------------
		This is part of TSVOS"""

	manifest=corpus if isinstance(corpus,DatasetManifest) else read_manifest(corpus)
	train=load_dataset(manifest,"train")
	test=load_dataset(manifest,"test")
	fraction=label_fraction(manifest)
	os.makedirs(out_dir,exist_ok=True)
	rows={}
	vanilla,_=train_vanilla(train,config)
	rows["Baseline"]=(vanilla,fraction)
	student,_=run_pipeline(manifest,config,os.path.join(out_dir,"pipeline"))
	teacher,_=_resume(os.path.join(out_dir,"pipeline","stage1"),"teacher.pt",config)
	rows["Baseline+STCS"]=(teacher,fraction)
	rows["Baseline+STCS+SDA"]=(student,fraction)
	if include_full:
		rows["Fully supervised"]=(train_fully_supervised([reveal(v) for v in train],config),1.)
	reports={}
	for name,(state,frac) in rows.items():
		report=evaluate_model(state,test,config,dict(name=name,label_fraction=frac))
		report.write_json(os.path.join(out_dir,name.lower().replace("+","_").replace(" ","_")+".json"))
		reports[name]=report
		logger.info("%s: J&F %.2f",name,report.corpus.JF)
	return reports
