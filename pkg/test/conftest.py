import os
import numpy as np
import pytest
import torch
import matplotlib
matplotlib.use("Agg")

from tsvos.core import Config, Frame, Mask, VideoSample
from tsvos.data import SyntheticSpec, generate_synthetic, two_shot_subsample, write_manifest, MANIFEST_NAME


def tiny_config(**overrides):
	params=dict(image_size=32,patch_stride=4,key_dim=8,value_dim=8,hidden_dim=4,batch_size=2,
		iterations_stage1=6,iterations_stage3=6,memory_every=2,memory_capacity=4,max_gap=4,progress=False,rng_seed=0)
	params.update(overrides)
	return Config(**params)



def tiny_spec(**overrides):
	params=dict(n_train=3,n_test=2,frames_per_video=6,image_size=32,radius_min=4.,radius_max=6.,rng_seed=0)
	params.update(overrides)
	return SyntheticSpec(**params)



def make_video(T=6,size=16,labeled=(0,5),hidden=False,video_id="v",seed=0):
	""" In-memory video with a square lesion moving one pixel per frame."""
	rng=np.random.default_rng(seed)
	frames=[]
	masks=[]
	for t in range(T):
		m=np.zeros((size,size),dtype=np.uint8)
		m[4:9,3+t%4:8+t%4]=1
		masks.append(Mask(m))
		frames.append(Frame(np.clip(0.6-0.3*m+0.05*rng.standard_normal((size,size)),0.,1.)))
	if hidden:
		gt=tuple(masks[t] if t in labeled else None for t in range(T))
		hid=tuple(None if t in labeled else masks[t] for t in range(T))
	else:
		gt=tuple(masks)
		hid=None
	return VideoSample(tuple(frames),gt,tuple(labeled),video_id,"train",hid)



@pytest.fixture
def config():
	return tiny_config()



@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
	monkeypatch.delenv("TSVOS_SEED",raising=False)
	torch.set_num_threads(1)



@pytest.fixture(scope="session")
def full_corpus(tmp_path_factory):
	""" Tiny synthetic corpus with every label available."""
	root=str(tmp_path_factory.mktemp("full_corpus"))
	generate_synthetic(tiny_spec(),root,progress=False)
	return root



@pytest.fixture(scope="session")
def two_shot_corpus(tmp_path_factory):
	""" Same corpus after first-last two-shot subsampling."""
	root=str(tmp_path_factory.mktemp("two_shot_corpus"))
	manifest=generate_synthetic(tiny_spec(),root,progress=False)
	manifest=two_shot_subsample(manifest,"first-last",np.random.default_rng(0))
	write_manifest(manifest,os.path.join(root,MANIFEST_NAME))
	return root
