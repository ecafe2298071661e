import numpy as np
import pytest

from tsvos.core import Config, Frame, Mask, Source
from tsvos.augment import (make_pair, weak_augment, strong_augment, sda, replay_geometry, rescale, hflip,
	jitter_intensity, gaussian_blur, STRONG_OPS, WEAK_OPS)
from tsvos.errors import MixSourceError


def _pair(source=Source.LABELED,size=16,seed=0):
	rng=np.random.default_rng(seed)
	m=np.zeros((size,size),dtype=np.uint8)
	m[3:10,5:12]=1
	return make_pair(Frame(rng.random((size,size))),Mask(m),source)



def test_rescale_identity_and_flip():
	x=np.random.default_rng(0).random((12,12))
	assert np.array_equal(rescale(x,1.,1),x)
	assert np.array_equal(hflip(hflip(x)),x)
	m=np.zeros((12,12))
	m[4:8,4:8]=1.
	zoomed=rescale(m,1.5,0)
	assert set(np.unique(zoomed))<={0.,1.}
	assert zoomed.sum()>m.sum()



def test_photometric_ops_stay_in_range():
	x=np.random.default_rng(1).random((12,12))
	assert jitter_intensity(x,0.3,1.3).max()<=1. and jitter_intensity(x,-0.3,1.3).min()>=0.
	y=gaussian_blur(x,1.)
	assert y.shape==x.shape and 0.<=y.min() and y.max()<=1.



def test_weak_augment_is_joint_and_replayable():
	pair=_pair()
	rng=np.random.default_rng(3)
	for _ in range(20):
		out=weak_augment(pair.frame,pair.mask,rng)
		assert out.frame.shape==pair.frame.shape
		assert out.applied_ops[0][0]=="rescale"
		assert all(name in WEAK_OPS for name,_ in out.applied_ops)
		x,m=replay_geometry(pair.frame.pixels,pair.mask.pixels,out.applied_ops)
		np.testing.assert_allclose(x,out.frame.pixels,atol=1e-12)
		assert np.array_equal(m,out.mask.pixels)



def test_ground_truth_items_never_get_strong_ops():
	labeled=_pair(Source.LABELED,size=8)
	mix=_pair(Source.PSEUDO,size=8,seed=1)
	rng=np.random.default_rng(0)
	config=Config(strong_prob=1.)
	n_strong=0
	for _ in range(10000):
		out=sda(labeled,rng,mix,config)
		n_strong+=sum(name in STRONG_OPS for name,_ in out.applied_ops)
	assert n_strong==0



def test_pseudo_items_get_weak_then_strong_ops():
	pseudo=_pair(Source.PSEUDO)
	mix=_pair(Source.PSEUDO,seed=1)
	rng=np.random.default_rng(0)
	out=sda(pseudo,rng,mix,Config(strong_prob=1.))
	names=[name for name,_ in out.applied_ops]
	assert names[0]=="rescale"
	assert names[-4:]==list(STRONG_OPS)
	assert out.source is Source.PSEUDO
	seen=set()
	for _ in range(200):
		seen.update(name for name,_ in sda(pseudo,rng,mix).applied_ops)
	assert set(STRONG_OPS)<=seen



def test_cutmix_needs_a_partner():
	pair=_pair(Source.PSEUDO)
	with pytest.raises(MixSourceError):
		strong_augment(pair,np.random.default_rng(0),None,Config(strong_prob=1.))



def test_photometric_ops_leave_the_mask_alone():
	pair=_pair(Source.PSEUDO)
	rng=np.random.default_rng(5)
	out=strong_augment(pair,rng,pair,Config(strong_prob=1.))
	ops=dict(out.applied_ops)
	expected=np.array(pair.mask.pixels)
	c=ops["cutout"]
	expected[c["y0"]:c["y0"]+c["h"],c["x0"]:c["x0"]+c["w"]]=0
	c=ops["cutmix"]
	expected[c["y0"]:c["y0"]+c["h"],c["x0"]:c["x0"]+c["w"]]=pair.mask.pixels[c["y0"]:c["y0"]+c["h"],c["x0"]:c["x0"]+c["w"]]
	assert np.array_equal(out.mask.pixels,expected)
	assert 0.<=out.frame.pixels.min() and out.frame.pixels.max()<=1.
