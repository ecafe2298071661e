""" Synthetic ultrasound-like videos, the on-disk dataset format and the two-shot label budget.

Layout:
	<root>/manifest.json
	<root>/<video_id>/frames/%04d.png    8-bit grayscale
	<root>/<video_id>/masks/%04d.png     ground truth, values {0,255}
	<pseudo_root>/<video_id>/pseudo/%04d.png   pseudo labels written by save_labelset

Paths in a manifest are relative to the directory of the manifest file.
-----------------------------
This is part of TSVOS"""

import os
import copy
import enum
import json
import logging
import numpy as np
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from PIL import Image
from scipy import ndimage
from tqdm import tqdm
from .core import Frame, Mask, VideoSample, LabelSet, Provenance, Stream
from .errors import SchemaError, ConflictError

logger=logging.getLogger(__name__)

SCHEMA_VERSION=1
MANIFEST_NAME="manifest.json"


class SubsampleStrategy(enum.Enum):
	FIRST_LAST="first-last"
	RANDOM_PAIR="random-pair"
	STRATIFIED="stratified"



@dataclass(frozen=True)
class SyntheticSpec:

	""" Parameters of the synthetic corpus: one elliptic hypoechoic lesion per video whose centre follows a reflected random walk (step sigma_pos px), whose radii oscillate (relative amplitude sigma_rad) and whose orientation drifts (step sigma_rot rad). Frames carry multiplicative speckle (1+speckle*n) with spatially correlated n, and occasional frame-level brightness shifts (probe pressure)."""

	n_train: int=40
	n_test: int=10
	frames_per_video: int=16
	image_size: int=64
	radius_min: float=7.
	radius_max: float=12.
	sigma_pos: float=1.
	sigma_rad: float=0.1
	sigma_rot: float=0.03
	speckle: float=0.3
	speckle_correlation: float=0.7
	edge_blur: float=1.
	background: float=0.6
	contrast: float=0.3
	brightness_shift_prob: float=0.1
	brightness_shift: float=0.08
	rng_seed: int=0

	@property
	def n_videos(self):
		return self.n_train+self.n_test

	def check(self):
		try:
			assert self.n_train>=1 and self.n_test>=0 and self.frames_per_video>=3 and self.image_size>=8
		except AssertionError:
			raise ValueError("SyntheticSpec: need n_train >= 1, n_test >= 0, frames_per_video >= 3, image_size >= 8")
		try:
			assert 0.<self.radius_min<=self.radius_max and min(self.sigma_pos,self.sigma_rad,self.sigma_rot,self.speckle)>=0.
		except AssertionError:
			raise ValueError("SyntheticSpec: radii must be positive and ordered, noise levels >= 0")
		r_max=self.radius_max*(1.+self.sigma_rad)
		try:
			assert 2.*(r_max+2.)+1.<self.image_size
		except AssertionError:
			raise ValueError("SyntheticSpec: the lesion does not fit 2 px inside the image")
		# speckle std after correlation ~ speckle/(2 sqrt(pi) sigma)
		noise_floor=self.speckle*self.background/(2.*np.sqrt(np.pi)*max(self.speckle_correlation,0.5))
		try:
			assert self.contrast>noise_floor and self.background-self.contrast>0.
		except AssertionError:
			raise ValueError("SyntheticSpec: lesion contrast must exceed the speckle noise floor")
		return self



def ellipse_mask(shape,cy,cx,a,b,theta):
	""" Rasterized filled ellipse (pixel centres inside or on the curve)."""
	yy,xx=np.mgrid[0:shape[0],0:shape[1]].astype(np.float64)
	dy=yy-cy
	dx=xx-cx
	u=(dx*np.cos(theta)+dy*np.sin(theta))/a
	v=(-dx*np.sin(theta)+dy*np.cos(theta))/b
	return (u*u+v*v<=1.).astype(np.uint8)



def _reflect(x,lo,hi):
	if x<lo:
		x=2.*lo-x
	if x>hi:
		x=2.*hi-x
	return float(np.clip(x,lo,hi))



def synthesize_video(spec,rng):

	""" synthesize_video draws one video.
		Inputs:
		- spec [SyntheticSpec]
		- rng [numpy Generator]
		Outputs:
		- frames [list of 2-dim uint8 arrays]: the quantized frames (as stored on disk).
		- masks [list of 2-dim uint8 arrays]: exact ground truth, values {0,1}.
		-----------------------------
		This is part of TSVOS"""

	S=spec.image_size
	shape=(S,S)
	a0=rng.uniform(spec.radius_min,spec.radius_max)
	b0=rng.uniform(spec.radius_min,spec.radius_max)*0.75
	r_max=max(a0,b0)*(1.+spec.sigma_rad)
	lo=r_max+2.
	hi=S-3.-r_max
	cy=rng.uniform(lo,hi)
	cx=rng.uniform(lo,hi)
	theta=rng.uniform(0.,np.pi)
	period=rng.uniform(6.,12.)
	phase=rng.uniform(0.,2.*np.pi)
	frames=[]
	masks=[]
	for t in range(spec.frames_per_video):
		if t>0:
			cy=_reflect(cy+rng.normal(0.,1.)*spec.sigma_pos,lo,hi)
			cx=_reflect(cx+rng.normal(0.,1.)*spec.sigma_pos,lo,hi)
			theta+=rng.normal(0.,1.)*spec.sigma_rot
		s=1.+spec.sigma_rad*np.sin(2.*np.pi*t/period+phase)
		mask=ellipse_mask(shape,cy,cx,a0*s,b0*s,theta)
		soft=ndimage.gaussian_filter(mask.astype(np.float64),spec.edge_blur) if spec.edge_blur>0 else mask.astype(np.float64)
		clean=spec.background-spec.contrast*soft
		noise=ndimage.gaussian_filter(rng.standard_normal(shape),spec.speckle_correlation)
		frame=clean*(1.+spec.speckle*noise)
		if rng.random()<spec.brightness_shift_prob:
			frame=frame+rng.uniform(-spec.brightness_shift,spec.brightness_shift)
		frames.append(np.rint(np.clip(frame,0.,1.)*255.).astype(np.uint8))
		masks.append(mask)
	return frames,masks



@dataclass
class DatasetManifest:

	""" In-memory manifest. 'root' is the directory the relative paths are resolved against; 'videos' is a list of dicts with keys id, split, frames, masks, available, labeled_indices, provenance, pseudo_masks, source_stream."""

	root: str
	videos: list
	schema_version: int=SCHEMA_VERSION
	info: dict=None

	def path(self,relpath):
		return os.path.join(self.root,relpath)

	def video(self,video_id):
		for v in self.videos:
			if v["id"]==video_id:
				return v
		raise KeyError("no video '%s' in manifest" % video_id)

	def split(self,name):
		return [v for v in self.videos if v["split"]==name]



def _video_entry(video_id,split,T):
	frames=["%s/frames/%04d.png" % (video_id,t) for t in range(T)]
	masks=["%s/masks/%04d.png" % (video_id,t) for t in range(T)]
	return dict(id=video_id,split=split,frames=frames,masks=masks,available=[True]*T,labeled_indices=[0,T-1],
		provenance=[Provenance.GROUND_TRUTH.value]*T,pseudo_masks=[None]*T,source_stream=[None]*T)



def _write_png(path,array):
	os.makedirs(os.path.dirname(path),exist_ok=True)
	Image.fromarray(np.asarray(array,dtype=np.uint8)).save(path,format="PNG")



def generate_synthetic(spec,out_dir,workers=0,progress=True):

	""" generate_synthetic writes a synthetic corpus (frames, exact masks, manifest) under out_dir. Deterministic for a given spec.
		Inputs:
		- spec [SyntheticSpec]
		- out_dir [str]
		- workers=0 [int]: >0 renders videos in a thread pool.
		- progress=True [bool]: tqdm progress bar.
		Outputs:
		- manifest [DatasetManifest]: every label available; the first n_train videos form the 'train' split.
		-----------------------------
		This is part of TSVOS"""

	spec.check()
	os.makedirs(out_dir,exist_ok=True)
	seeds=np.random.SeedSequence(spec.rng_seed).spawn(spec.n_videos)
	T=spec.frames_per_video
	entries=[_video_entry("video_%04d" % k,"train" if k<spec.n_train else "test",T) for k in range(spec.n_videos)]
	def render(k):
		frames,masks=synthesize_video(spec,np.random.default_rng(seeds[k]))
		entry=entries[k]
		for t in range(T):
			_write_png(os.path.join(out_dir,entry["frames"][t]),frames[t])
			_write_png(os.path.join(out_dir,entry["masks"][t]),masks[t]*255)
	if workers>0:
		with ThreadPoolExecutor(max_workers=workers) as pool:
			list(tqdm(pool.map(render,range(spec.n_videos)),total=spec.n_videos,desc="synthetic videos",disable=not progress))
	else:
		for k in tqdm(range(spec.n_videos),desc="synthetic videos",disable=not progress):
			render(k)
	manifest=DatasetManifest(os.path.abspath(out_dir),entries,SCHEMA_VERSION,dict(spec=asdict(spec),label_fraction=1.,strategy=None))
	write_manifest(manifest,os.path.join(out_dir,MANIFEST_NAME))
	logger.info("synthetic corpus: %d train + %d test videos of %d frames written to %s",spec.n_train,spec.n_test,T,out_dir)
	return manifest



def _rebase(relpath,old_root,new_root):
	if relpath is None:
		return None
	return os.path.relpath(os.path.join(old_root,relpath),new_root).replace(os.sep,"/")



def write_manifest(manifest,path):

	""" write_manifest serializes a manifest to JSON (sorted keys), rewriting paths relative to the directory of 'path'. Returns the manifest rooted there."""

	new_root=os.path.dirname(os.path.abspath(path))
	videos=[]
	for v in manifest.videos:
		v=copy.deepcopy(v)
		for key in ("frames","masks","pseudo_masks"):
			v[key]=[_rebase(p,manifest.root,new_root) for p in v[key]]
		videos.append(v)
	doc=dict(schema_version=manifest.schema_version,info=manifest.info or {},videos=videos)
	os.makedirs(new_root,exist_ok=True)
	with open(path,"w") as f:
		json.dump(doc,f,sort_keys=True,indent=1)
	return DatasetManifest(new_root,videos,manifest.schema_version,manifest.info)



_VIDEO_KEYS=("id","split","frames","masks","available","labeled_indices","provenance","pseudo_masks","source_stream")

def read_manifest(path):

	""" read_manifest parses and checks a manifest file.
		Errors:
		- SchemaError (with the path) on unreadable JSON, unsupported schema_version or missing keys.
		-----------------------------
		This is part of TSVOS"""

	if os.path.isdir(path):
		path=os.path.join(path,MANIFEST_NAME)
	try:
		with open(path,"r") as f:
			doc=json.load(f)
	except OSError as err:
		raise SchemaError("cannot read manifest: "+str(err),path)
	except ValueError as err:
		raise SchemaError("invalid JSON: "+str(err),path)
	try:
		assert doc.get("schema_version")==SCHEMA_VERSION
	except AssertionError:
		raise SchemaError("unsupported schema_version %s (expected %d)" % (doc.get("schema_version"),SCHEMA_VERSION),path)
	for v in doc.get("videos",[]):
		missing=[k for k in _VIDEO_KEYS if k not in v]
		try:
			assert not missing
		except AssertionError:
			raise SchemaError("video '%s' lacks key(s) %s" % (v.get("id"),", ".join(missing)),path)
		T=len(v["frames"])
		try:
			assert all(len(v[k])==T for k in ("masks","available","provenance","pseudo_masks","source_stream"))
			t1,t2=v["labeled_indices"]
			assert 0<=t1<t2<T
		except (AssertionError,ValueError,TypeError):
			raise SchemaError("video '%s' has inconsistent per-frame lists or labeled_indices" % v["id"],path)
	return DatasetManifest(os.path.dirname(os.path.abspath(path)),doc["videos"],doc["schema_version"],doc.get("info"))



def two_shot_subsample(manifest,strategy,rng):

	""" two_shot_subsample keeps exactly two labeled frames per training video; the other training labels stay on disk but are flagged unavailable. Test videos keep full ground truth.
		Inputs:
		- manifest [DatasetManifest]: training videos with full ground truth.
		- strategy [SubsampleStrategy or str]:
			-> first-last: (0, T-1).
			-> random-pair: two distinct frames uniformly at random.
			-> stratified: t1 uniform in the first half, t2 uniform in the second half.
		- rng [numpy Generator]
		Outputs:
		- manifest [DatasetManifest]: a new manifest; info['label_fraction'] is the achieved training label fraction (2 per video / training frames).
		-----------------------------
		This is part of TSVOS"""

	strategy=SubsampleStrategy(strategy)
	out=copy.deepcopy(manifest)
	n_labeled=0
	n_frames=0
	for v in out.videos:
		T=len(v["frames"])
		if v["split"]!="train":
			v["available"]=[True]*T
			v["provenance"]=[Provenance.GROUND_TRUTH.value]*T
			continue
		if strategy is SubsampleStrategy.FIRST_LAST:
			t1,t2=0,T-1
		elif strategy is SubsampleStrategy.RANDOM_PAIR:
			t1,t2=sorted(int(x) for x in rng.choice(T,2,replace=False))
		else:
			t1=int(rng.integers(0,T//2))
			t2=int(rng.integers(T//2,T))
		v["labeled_indices"]=[t1,t2]
		v["available"]=[t in (t1,t2) for t in range(T)]
		v["provenance"]=[Provenance.GROUND_TRUTH.value if t in (t1,t2) else None for t in range(T)]
		v["pseudo_masks"]=[None]*T
		v["source_stream"]=[None]*T
		n_labeled+=2
		n_frames+=T
	info=dict(out.info or {})
	info["strategy"]=strategy.value
	info["label_fraction"]=n_labeled/float(max(n_frames,1))
	out.info=info
	logger.info("two-shot subsample (%s): training label fraction %.2f%%",strategy.value,100.*info["label_fraction"])
	return out



def label_fraction(manifest,split="train"):
	""" Fraction of frames of a split whose label is available for training."""
	videos=manifest.split(split)
	n=sum(len(v["frames"]) for v in videos)
	return sum(sum(v["available"]) for v in videos)/float(max(n,1))



def _read_png(manifest,relpath,kind):
	path=manifest.path(relpath)
	if not os.path.isfile(path):
		raise SchemaError("missing %s file" % kind,path)
	try:
		array=np.array(Image.open(path))
	except OSError as err:
		raise SchemaError("unreadable %s file: %s" % (kind,err),path)
	if array.ndim!=2:
		raise SchemaError("%s must be a single-channel image" % kind,path)
	return array



def _read_mask(manifest,relpath):
	array=_read_png(manifest,relpath,"mask")
	try:
		assert np.all((array==0) | (array==255))
	except AssertionError:
		raise SchemaError("mask values must be 0 or 255",manifest.path(relpath))
	return Mask((array//255).astype(np.uint8))



def load_dataset(manifest,split=None):

	""" load_dataset reads the videos of a manifest.
		Inputs:
		- manifest [DatasetManifest or str]: manifest object, manifest file or dataset directory.
		- split=None [str]: 'train', 'test' or None for all.
		Outputs:
		- videos [list of VideoSample]: frames in [0,1] (png/255), masks 255->1. Labels flagged unavailable go to hidden_masks; gt_masks holds the available ones.
		Errors:
		- SchemaError naming the file when a referenced file is missing or malformed.
		-----------------------------
		This is part of TSVOS"""

	if not isinstance(manifest,DatasetManifest):
		manifest=read_manifest(manifest)
	videos=[]
	for v in manifest.videos:
		if split is not None and v["split"]!=split:
			continue
		T=len(v["frames"])
		frames=tuple(Frame(_read_png(manifest,p,"frame").astype(np.float64)/255.) for p in v["frames"])
		gt=[None]*T
		hidden=[None]*T
		for t in range(T):
			if v["masks"][t] is None:
				continue
			mask=_read_mask(manifest,v["masks"][t])
			if v["available"][t]:
				gt[t]=mask
			else:
				hidden[t]=mask
		videos.append(VideoSample(frames,tuple(gt),tuple(v["labeled_indices"]),v["id"],v["split"],tuple(hidden)))
	return videos



def load_labelsets(manifest,split="train"):

	""" load_labelsets rebuilds the LabelSet of every video whose frames all carry a training label (ground truth or pseudo).
		Outputs:
		- labelsets [dict video_id -> LabelSet]
		-----------------------------
		This is part of TSVOS"""

	if not isinstance(manifest,DatasetManifest):
		manifest=read_manifest(manifest)
	out={}
	for v in manifest.videos:
		if split is not None and v["split"]!=split:
			continue
		if any(p is None for p in v["provenance"]):
			continue
		masks=[]
		for t,p in enumerate(v["provenance"]):
			if p==Provenance.GROUND_TRUTH.value:
				masks.append(_read_mask(manifest,v["masks"][t]))
			else:
				masks.append(_read_mask(manifest,v["pseudo_masks"][t]))
		provenance=tuple(Provenance(p) for p in v["provenance"])
		streams=tuple(None if s is None else Stream(s) for s in v["source_stream"])
		out[v["id"]]=LabelSet(tuple(masks),provenance,streams).check(tuple(v["labeled_indices"]))
	return out



def save_labelset(video_id,labelset,manifest,out_dir=None):

	""" save_labelset writes the pseudo labels of a video as PNG and records their provenance. Ground-truth files are never written.
		Inputs:
		- video_id [str]
		- labelset [LabelSet]
		- manifest [DatasetManifest]
		- out_dir=None [str]: root for <video_id>/pseudo/%04d.png, default manifest.root.
		Outputs:
		- manifest [DatasetManifest]: updated copy (call write_manifest to persist it).
		Errors:
		- ConflictError when a GroundTruth entry would be replaced by a pseudo label.
		-----------------------------
		This is part of TSVOS"""

	out=copy.deepcopy(manifest)
	v=out.video(video_id)
	T=len(v["frames"])
	try:
		assert len(labelset)==T
	except AssertionError:
		raise ConflictError("labelset of video '%s' has %d frames, manifest has %d" % (video_id,len(labelset),T))
	root=out.root if out_dir is None else os.path.abspath(out_dir)
	for t in range(T):
		new=labelset.provenance[t]
		if v["provenance"][t]==Provenance.GROUND_TRUTH.value:
			if new is not Provenance.GROUND_TRUTH:
				raise ConflictError("video '%s', frame %d: refusing to replace a GroundTruth label by a pseudo label" % (video_id,t))
			continue
		if new is Provenance.GROUND_TRUTH:
			raise ConflictError("video '%s', frame %d: no ground truth is available for this frame" % (video_id,t))
		relpath="%s/pseudo/%04d.png" % (video_id,t)
		_write_png(os.path.join(root,relpath),labelset.masks[t].pixels*255)
		v["pseudo_masks"][t]=_rebase(relpath,root,out.root)
		v["provenance"][t]=Provenance.PSEUDO.value
		v["source_stream"][t]=labelset.source_stream[t].value
	return out
