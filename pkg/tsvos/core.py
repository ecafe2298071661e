import enum
import numpy as np
from dataclasses import dataclass, fields
from .errors import ShapeError, ConfigError, LabelAuditError


class Provenance(enum.Enum):
	GROUND_TRUTH="GroundTruth"
	PSEUDO="Pseudo"


class Stream(enum.Enum):
	FWD_T1="FwdT1"
	FWD_T2="FwdT2"
	REV_T1="RevT1"
	REV_T2="RevT2"


class Direction(enum.Enum):
	FORWARD="Forward"
	REVERSE="Reverse"


class Source(enum.Enum):
	LABELED="Labeled"
	PSEUDO="Pseudo"



@dataclass(frozen=True,eq=False)
class Frame:

	""" Grayscale frame. 'pixels' [2-dim numpy array of floats]: intensities in [0,1], both dims >= 8.
		The array is copied and made read-only at construction."""

	pixels: np.ndarray

	def __post_init__(self):
		pixels=np.array(self.pixels,dtype=np.float64)
		try:
			assert pixels.ndim==2 and pixels.shape[0]>=8 and pixels.shape[1]>=8
		except AssertionError:
			raise ShapeError("Error at input 'pixels': must be a 2-dim array with both dims >= 8, got shape "+str(pixels.shape))
		try:
			assert np.all(np.isfinite(pixels)) and pixels.min()>=0. and pixels.max()<=1.
		except AssertionError:
			raise ValueError("Error at input 'pixels': frame intensities must lie in [0,1]")
		pixels.setflags(write=False)
		object.__setattr__(self,"pixels",pixels)

	@property
	def shape(self):
		return self.pixels.shape



@dataclass(frozen=True,eq=False)
class Mask:

	""" Binary lesion mask. 'pixels' [2-dim numpy array]: values in {0,1} (0=background, 1=lesion)."""

	pixels: np.ndarray

	def __post_init__(self):
		pixels=np.asarray(self.pixels)
		try:
			assert pixels.ndim==2
		except AssertionError:
			raise ShapeError("Error at input 'pixels': a mask must be a 2-dim array, got shape "+str(pixels.shape))
		try:
			assert np.all((pixels==0) | (pixels==1))
		except AssertionError:
			raise ValueError("Error at input 'pixels': mask values must be 0 or 1")
		pixels=pixels.astype(np.uint8)
		pixels.setflags(write=False)
		object.__setattr__(self,"pixels",pixels)

	@property
	def shape(self):
		return self.pixels.shape

	@property
	def area(self):
		return int(self.pixels.sum())



@dataclass(frozen=True,eq=False)
class VideoSample:

	""" One video of the corpus.
		- frames [tuple of Frame]: length T.
		- gt_masks [tuple of Mask or None]: masks usable for training (None where the label is absent or hidden).
		- labeled_indices [(int,int)]: the two labeled frames (t1,t2), 0-based, t1<t2.
		- video_id [str], split [str]: 'train' or 'test'.
		- hidden_masks [tuple of Mask or None, or None]: ground truth kept on disk but unavailable for training (evaluation, oracle runs)."""

	frames: tuple
	gt_masks: tuple
	labeled_indices: tuple
	video_id: str=""
	split: str="train"
	hidden_masks: tuple=None

	@property
	def T(self):
		return len(self.frames)

	@property
	def image_shape(self):
		return self.frames[0].shape

	def supervision_mask(self,t):
		""" Returns the mask of frame t for use in a loss term. Raises LabelAuditError when the label is hidden or absent."""
		mask=self.gt_masks[t]
		if mask is None:
			if self.hidden_masks is not None and self.hidden_masks[t] is not None:
				raise LabelAuditError("video '%s': label of frame %d is hidden and unavailable for training" % (self.video_id,t))
			raise LabelAuditError("video '%s': frame %d has no label" % (self.video_id,t))
		return mask

	def reference_mask(self,t):
		""" Ground truth of frame t regardless of availability (evaluation only), or None."""
		if self.gt_masks[t] is not None:
			return self.gt_masks[t]
		if self.hidden_masks is not None:
			return self.hidden_masks[t]
		return None

	def full_masks(self):
		""" All ground-truth masks (available or hidden); None if some frame has none."""
		masks=[self.reference_mask(t) for t in range(self.T)]
		if any(m is None for m in masks):
			return None
		return masks



@dataclass(frozen=True,eq=False)
class LabelSet:

	""" Merged annotation of a full video: one mask per frame, its provenance and, for pseudo labels, the stream it was taken from."""

	masks: tuple
	provenance: tuple
	source_stream: tuple

	def __len__(self):
		return len(self.masks)

	@property
	def pseudo_fraction(self):
		return sum(p is Provenance.PSEUDO for p in self.provenance)/float(len(self.provenance))

	def check(self,labeled_indices):
		""" Checks the LabelSet invariants against the video's labeled indices."""
		T=len(self.masks)
		try:
			assert len(self.provenance)==T and len(self.source_stream)==T
		except AssertionError:
			raise ShapeError("LabelSet: masks, provenance and source_stream must have the same length")
		for t in labeled_indices:
			try:
				assert self.provenance[t] is Provenance.GROUND_TRUTH
			except AssertionError:
				raise ValueError("LabelSet: labeled frame %d must have GroundTruth provenance" % t)
		for t in range(T):
			try:
				assert self.masks[t] is not None
				assert self.provenance[t] is not Provenance.PSEUDO or self.source_stream[t] is not None
			except AssertionError:
				raise ValueError("LabelSet: frame %d lacks a mask or a source stream" % t)
		return self



# numeric fields allowed to be zero
_NON_NEGATIVE=("lambda_pcl","weight_decay","workers","rng_seed","flip_prob","strong_prob","brightness","contrast")

@dataclass(frozen=True)
class Config:

	""" All tunables of a run. Defaults are the desk-scale preset (64x64 frames, batch 4, lr 1e-4).
		Use Config.full_scale() for the 384x384 / batch 8 / lr 1e-5 / 150K-iteration preset."""

	image_size: int=64
	patch_stride: int=8
	key_dim: int=32
	value_dim: int=32
	hidden_dim: int=16
	learning_rate: float=1e-4
	weight_decay: float=0.0
	batch_size: int=4
	iterations_stage1: int=2000
	iterations_stage3: int=2000
	# space-time consistency
	lambda_pcl: float=0.1
	use_stcs: bool=True
	stcs_in_stage3: bool=True
	pcl_mean_outside_log: bool=False
	# STCS keys are unit vectors scaled so that their dot products are cosines / pcl_temperature
	pcl_temperature: float=0.1
	# memory
	memory_every: int=3
	memory_capacity: int=8
	threshold: float=0.5
	# pseudo labels and re-training
	merge_rule: str="temporal"
	max_gap: int=10
	use_sda: bool=True
	teacher_width: int=1
	student_width: int=1
	student_warm_start: bool=False
	# weak augmentation
	scale_min: float=0.8
	scale_max: float=1.25
	flip_prob: float=0.5
	# strong augmentation
	strong_prob: float=0.5
	brightness: float=0.3
	contrast: float=0.3
	blur_sigma_min: float=0.5
	blur_sigma_max: float=1.5
	cut_area_min: float=0.1
	cut_area_max: float=0.3
	# evaluation
	hd_mode: str="max"
	boundary_tolerance: float=None
	# runtime
	workers: int=0
	device: str="cpu"
	progress: bool=True
	rng_seed: int=0

	def __post_init__(self):
		for f in fields(self):
			value=getattr(self,f.name)
			if isinstance(value,bool) or value is None or isinstance(value,str):
				continue
			if f.name in _NON_NEGATIVE:
				try:
					assert value>=0
				except AssertionError:
					raise ConfigError("Error at input '"+f.name+"': must be >= 0")
			else:
				try:
					assert value>0
				except AssertionError:
					raise ConfigError("Error at input '"+f.name+"': must be > 0")
		try:
			assert self.image_size%self.patch_stride==0
		except AssertionError:
			raise ConfigError("Error at input 'image_size': must be divisible by 'patch_stride'")
		try:
			assert self.patch_stride>=2 and (self.patch_stride & (self.patch_stride-1))==0
		except AssertionError:
			raise ConfigError("Error at input 'patch_stride': must be a power of 2, >= 2")
		try:
			assert 0.<self.threshold<1.
		except AssertionError:
			raise ConfigError("Error at input 'threshold': must be in (0,1)")
		try:
			assert self.max_gap>=2
		except AssertionError:
			raise ConfigError("Error at input 'max_gap': must be >= 2")
		try:
			assert self.scale_min<=self.scale_max and self.blur_sigma_min<=self.blur_sigma_max and self.cut_area_min<=self.cut_area_max<=1.
		except AssertionError:
			raise ConfigError("Error: augmentation ranges must satisfy min <= max (and cut areas <= 1)")
		try:
			assert self.merge_rule in ("temporal","overlap")
		except AssertionError:
			raise ConfigError("Error at input 'merge_rule': must be 'temporal' or 'overlap'")
		try:
			assert self.hd_mode in ("max","hd95")
		except AssertionError:
			raise ConfigError("Error at input 'hd_mode': must be 'max' or 'hd95'")

	@classmethod
	def desk(cls,**overrides):
		return cls(**overrides)

	@classmethod
	def full_scale(cls,**overrides):
		params=dict(image_size=384,batch_size=8,learning_rate=1e-5,iterations_stage1=150000,iterations_stage3=150000)
		params.update(overrides)
		return cls(**params)



def validate_video(sample):

	""" validate_video checks the invariants of a VideoSample and returns it unchanged.
		Inputs:
		- sample [VideoSample]
		Outputs:
		- sample [VideoSample]: the very same object.
		Errors:
		- IndexError if T<3, if labeled_indices are out of range or not ordered, or if a labeled mask is missing.
		- ShapeError if a frame or a mask does not share the shape of the first frame.
		-----------------------------
		This is part of TSVOS"""

	T=len(sample.frames)
	try:
		assert T>=3
	except AssertionError:
		raise IndexError("video '%s': at least 3 frames are required, got %d" % (sample.video_id,T))
	try:
		assert len(sample.gt_masks)==T
	except AssertionError:
		raise IndexError("video '%s': gt_masks must have one entry per frame" % sample.video_id)
	try:
		t1,t2=sample.labeled_indices
		assert 0<=t1<t2<=T-1
	except (AssertionError,TypeError,ValueError):
		raise IndexError("video '%s': labeled_indices %s must satisfy 0 <= t1 < t2 <= T-1" % (sample.video_id,str(sample.labeled_indices)))
	for t in (t1,t2):
		try:
			assert sample.gt_masks[t] is not None
		except AssertionError:
			raise IndexError("video '%s': the mask of labeled frame %d is missing" % (sample.video_id,t))
	shape=sample.frames[0].shape
	for t in range(T):
		try:
			assert sample.frames[t].shape==shape
		except AssertionError:
			raise ShapeError("video '%s': frame %d has shape %s, expected %s" % (sample.video_id,t,sample.frames[t].shape,shape))
		for masks in (sample.gt_masks,sample.hidden_masks):
			if masks is None or masks[t] is None:
				continue
			try:
				assert masks[t].shape==shape
			except AssertionError:
				raise ShapeError("video '%s': mask %d has shape %s, frame shape is %s" % (sample.video_id,t,masks[t].shape,shape))
	return sample



def binarize(prob_map,threshold=0.5):

	""" binarize turns a probability map into a Mask: pixel=1 iff prob>=threshold.
		Inputs:
		- prob_map [2-dim array of floats in [0,1]]: numpy array or torch tensor.
		- threshold=0.5 [float in (0,1)]
		Outputs:
		- mask [Mask]
		-----------------------------
		This is part of TSVOS"""

	try:
		assert 0.<threshold<1.
	except AssertionError:
		raise ValueError("Error at input 'threshold': must be in (0,1)")
	if hasattr(prob_map,"detach"):
		prob_map=prob_map.detach().cpu().numpy()
	prob_map=np.asarray(prob_map)
	return Mask((prob_map>=threshold).astype(np.uint8))
