""" Source-dependent augmentation. Frames whose label is ground truth get weak transforms only
(random rescale about the centre, horizontal flip); pseudo-labelled frames get weak then strong
transforms (intensity jitter, blur, CutOut, CutMix). Geometric and mask-editing ops are applied to the
frame and the mask alike, photometric ops to the frame only. Every op is recorded in 'applied_ops'
as (name, params) so that it can be replayed.
-----------------------------
This is part of TSVOS"""

import numpy as np
from scipy import ndimage
from dataclasses import dataclass
from .core import Frame, Mask, Source, Config
from .errors import MixSourceError

WEAK_OPS=("rescale","hflip")
STRONG_OPS=("jitter","blur","cutout","cutmix")
GEOMETRIC_OPS=("rescale","hflip","cutout")


@dataclass(frozen=True,eq=False)
class AugmentedPair:
	frame: Frame
	mask: Mask
	applied_ops: tuple=()
	source: Source=Source.LABELED



def make_pair(frame,mask,source=Source.LABELED):
	if not isinstance(frame,Frame):
		frame=Frame(frame)
	if not isinstance(mask,Mask):
		mask=Mask(mask)
	return AugmentedPair(frame,mask,(),source)



def rescale(x,scale,order):
	""" Zoom by 'scale' about the image centre, then crop/pad (zeros) back to the input size. order=1 for frames, 0 for masks."""
	if scale==1.:
		return np.array(x,dtype=np.float64)
	centre=(np.array(x.shape,dtype=np.float64)-1.)/2.
	return ndimage.affine_transform(np.asarray(x,dtype=np.float64),np.full(2,1./scale),offset=centre-centre/scale,order=order,mode="constant",cval=0.)



def hflip(x):
	return np.array(x[:,::-1],dtype=np.float64)



def jitter_intensity(x,brightness,contrast):
	""" Contrast about the frame mean, then brightness shift, clamped to [0,1]."""
	mean=x.mean()
	return np.clip((x-mean)*contrast+mean+brightness,0.,1.)



def gaussian_blur(x,sigma):
	return np.clip(ndimage.gaussian_filter(np.asarray(x,dtype=np.float64),sigma,mode="nearest"),0.,1.)



def cutout(frame,mask,y0,x0,h,w):
	""" Zeroes a rectangle of the frame and sets the mask to background inside it."""
	frame=np.array(frame,dtype=np.float64)
	mask=np.array(mask,dtype=np.uint8)
	frame[y0:y0+h,x0:x0+w]=0.
	mask[y0:y0+h,x0:x0+w]=0
	return frame,mask



def cutmix(frame,mask,mix_frame,mix_mask,y0,x0,h,w):
	""" Pastes the same rectangle of (mix_frame,mix_mask) into (frame,mask)."""
	frame=np.array(frame,dtype=np.float64)
	mask=np.array(mask,dtype=np.uint8)
	frame[y0:y0+h,x0:x0+w]=mix_frame[y0:y0+h,x0:x0+w]
	mask[y0:y0+h,x0:x0+w]=mix_mask[y0:y0+h,x0:x0+w]
	return frame,mask



def _random_rectangle(shape,rng,config):
	H,W=shape
	area=rng.uniform(config.cut_area_min,config.cut_area_max)*H*W
	ratio=np.exp(rng.uniform(np.log(0.5),np.log(2.)))
	h=int(np.clip(round(np.sqrt(area*ratio)),1,H))
	w=int(np.clip(round(np.sqrt(area/ratio)),1,W))
	y0=int(rng.integers(0,H-h+1))
	x0=int(rng.integers(0,W-w+1))
	return dict(y0=y0,x0=x0,h=h,w=w)



def weak_augment(frame,mask,rng,config=None,source=Source.LABELED):

	""" weak_augment applies a random rescale (scale in [scale_min,scale_max], crop/pad back) and a horizontal flip (probability flip_prob) jointly to frame and mask.
		Inputs:
		- frame [Frame], mask [Mask]: same shape.
		- rng [numpy Generator]
		- config=None [Config]: augmentation ranges, defaults to Config().
		- source=Source.LABELED [Source]: recorded in the output.
		Outputs:
		- pair [AugmentedPair]
		-----------------------------
		This is part of TSVOS"""

	if config is None:
		config=Config()
	scale=float(rng.uniform(config.scale_min,config.scale_max))
	flip=bool(rng.random()<config.flip_prob)
	ops=(("rescale",dict(scale=scale)),)
	if flip:
		ops+=(("hflip",{}),)
	x,m=replay_geometry(frame.pixels,mask.pixels,ops)
	return AugmentedPair(Frame(np.clip(x,0.,1.)),Mask(m),ops,source)



def strong_augment(pair,rng,mix_source=None,config=None):

	""" strong_augment applies, each with independent probability strong_prob (in this order): intensity jitter, Gaussian blur, CutOut, CutMix.
		Inputs:
		- pair [AugmentedPair]: a pseudo-labelled pair (the caller routes).
		- rng [numpy Generator]
		- mix_source=None [AugmentedPair]: second pair for CutMix, same shape.
		- config=None [Config]
		Outputs:
		- pair [AugmentedPair]: the ops are appended to pair.applied_ops.
		Errors:
		- MixSourceError when CutMix is drawn and mix_source is None.
		-----------------------------
		This is part of TSVOS"""

	if config is None:
		config=Config()
	x=np.array(pair.frame.pixels)
	m=np.array(pair.mask.pixels)
	ops=list(pair.applied_ops)
	p=config.strong_prob
	if rng.random()<p:
		b=float(rng.uniform(-config.brightness,config.brightness))
		c=float(rng.uniform(1.-config.contrast,1.+config.contrast))
		x=jitter_intensity(x,b,c)
		ops.append(("jitter",dict(brightness=b,contrast=c)))
	if rng.random()<p:
		sigma=float(rng.uniform(config.blur_sigma_min,config.blur_sigma_max))
		x=gaussian_blur(x,sigma)
		ops.append(("blur",dict(sigma=sigma)))
	if rng.random()<p:
		rect=_random_rectangle(x.shape,rng,config)
		x,m=cutout(x,m,**rect)
		ops.append(("cutout",rect))
	if rng.random()<p:
		if mix_source is None:
			raise MixSourceError("strong_augment: CutMix drawn but no mix_source given")
		rect=_random_rectangle(x.shape,rng,config)
		x,m=cutmix(x,m,mix_source.frame.pixels,mix_source.mask.pixels,**rect)
		ops.append(("cutmix",rect))
	return AugmentedPair(Frame(x),Mask(m),tuple(ops),pair.source)



def sda(pair,rng,mix_source=None,config=None):

	""" sda routes a pair by the source of its label: Labeled -> weak only; Pseudo -> weak then strong.
		Inputs:
		- pair [AugmentedPair]: original frame/mask with its source (see make_pair).
		- rng [numpy Generator]
		- mix_source=None [AugmentedPair]: CutMix partner for pseudo pairs.
		- config=None [Config]
		Outputs:
		- pair [AugmentedPair]
		-----------------------------
		This is part of TSVOS"""

	weak=weak_augment(pair.frame,pair.mask,rng,config,pair.source)
	if pair.source is Source.PSEUDO:
		return strong_augment(weak,rng,mix_source,config)
	return weak



def replay_geometry(frame,mask,applied_ops):

	""" replay_geometry re-applies the recorded rescale/hflip/cutout ops to a frame and a mask (photometric ops and cutmix are skipped).
		Inputs:
		- frame [2-dim array or None]
		- mask [2-dim array]
		- applied_ops [sequence of (name, params)]
		Outputs:
		- frame [2-dim array of floats or None], mask [2-dim array of uint8]
		-----------------------------
		This is part of TSVOS"""

	x=None if frame is None else np.asarray(frame,dtype=np.float64)
	m=np.asarray(mask,dtype=np.float64)
	for name,params in applied_ops:
		if name=="rescale":
			if x is not None:
				x=rescale(x,params["scale"],1)
			m=rescale(m,params["scale"],0)
		elif name=="hflip":
			if x is not None:
				x=hflip(x)
			m=hflip(m)
		elif name=="cutout":
			y0,x0,h,w=params["y0"],params["x0"],params["h"],params["w"]
			if x is not None:
				x=x.copy()
				x[y0:y0+h,x0:x0+w]=0.
			m=m.copy()
			m[y0:y0+h,x0:x0+w]=0.
	return x,np.rint(m).astype(np.uint8)
