import os
import json
import hashlib
import numpy as np
import pytest
from scipy import ndimage

from tsvos.core import Provenance, Stream, LabelSet
from tsvos.data import (SyntheticSpec, synthesize_video, generate_synthetic, read_manifest, write_manifest, two_shot_subsample,
	label_fraction, load_dataset, load_labelsets, save_labelset, ellipse_mask, MANIFEST_NAME)
from tsvos.errors import SchemaError, ConflictError, LabelAuditError
from tsvos.metrics import dice
from conftest import tiny_spec


def _digest(root):
	h=hashlib.sha256()
	for dirpath,dirnames,filenames in sorted(os.walk(root)):
		dirnames.sort()
		for name in sorted(filenames):
			path=os.path.join(dirpath,name)
			h.update(os.path.relpath(path,root).encode())
			with open(path,"rb") as f:
				h.update(f.read())
	return h.hexdigest()



def test_spec_checks():
	SyntheticSpec().check()
	with pytest.raises(ValueError):
		SyntheticSpec(image_size=16,radius_max=12.).check()
	with pytest.raises(ValueError):
		SyntheticSpec(contrast=0.01).check()
	with pytest.raises(ValueError):
		SyntheticSpec(frames_per_video=2).check()



def test_ellipse_mask():
	m=ellipse_mask((21,21),10.,10.,5.,5.,0.)
	assert m[10,10]==1 and m[10,15]==1 and m[10,16]==0
	assert abs(int(m.sum())-np.pi*25.)<=12



def test_static_lesion_without_motion():
	spec=SyntheticSpec(sigma_pos=0.,sigma_rad=0.,sigma_rot=0.)
	_,masks=synthesize_video(spec,np.random.default_rng(0))
	assert all(np.array_equal(m,masks[0]) for m in masks)



def test_one_connected_lesion_inside_the_image():
	spec=SyntheticSpec()
	rng=np.random.default_rng(1)
	for _ in range(5):
		frames,masks=synthesize_video(spec,rng)
		assert len(frames)==spec.frames_per_video
		for f,m in zip(frames,masks):
			assert f.dtype==np.uint8 and f.shape==(64,64)
			assert set(np.unique(m))<={0,1}
			_,n=ndimage.label(m)
			assert n==1
			assert not m[:2].any() and not m[-2:].any() and not m[:,:2].any() and not m[:,-2:].any()



def test_lesion_is_darker_than_background():
	frames,masks=synthesize_video(SyntheticSpec(),np.random.default_rng(2))
	for f,m in zip(frames,masks):
		assert f[m==1].mean()<f[m==0].mean()



def test_generation_is_deterministic(tmp_path):
	a=str(tmp_path/"a")
	b=str(tmp_path/"b")
	generate_synthetic(tiny_spec(),a,progress=False)
	generate_synthetic(tiny_spec(),b,workers=2,progress=False)
	assert _digest(a)==_digest(b)
	c=str(tmp_path/"c")
	generate_synthetic(tiny_spec(rng_seed=1),c,progress=False)
	assert _digest(a)!=_digest(c)



def test_load_round_trip(full_corpus):
	spec=tiny_spec()
	manifest=read_manifest(full_corpus)
	assert len(manifest.split("train"))==spec.n_train and len(manifest.split("test"))==spec.n_test
	assert sorted(os.listdir(full_corpus))==sorted([MANIFEST_NAME]+[v["id"] for v in manifest.videos])
	videos=load_dataset(manifest)
	seeds=np.random.SeedSequence(spec.rng_seed).spawn(spec.n_videos)
	frames,masks=synthesize_video(spec,np.random.default_rng(seeds[0]))
	v=videos[0]
	assert v.T==spec.frames_per_video and v.split=="train"
	for t in range(v.T):
		assert np.array_equal(np.rint(v.frames[t].pixels*255.).astype(np.uint8),frames[t])
		assert np.array_equal(v.gt_masks[t].pixels,masks[t])
	assert label_fraction(manifest)==1.



def test_missing_file_names_the_file(tmp_path):
	root=str(tmp_path/"corpus")
	manifest=generate_synthetic(tiny_spec(n_train=1,n_test=0),root,progress=False)
	victim=manifest.path(manifest.videos[0]["masks"][2])
	os.remove(victim)
	with pytest.raises(SchemaError) as info:
		load_dataset(root)
	assert info.value.path==victim
	with pytest.raises(SchemaError):
		read_manifest(str(tmp_path/"nowhere"))



def test_bad_manifests(tmp_path):
	path=tmp_path/MANIFEST_NAME
	path.write_text("{not json")
	with pytest.raises(SchemaError):
		read_manifest(str(path))
	path.write_text(json.dumps(dict(schema_version=99,videos=[])))
	with pytest.raises(SchemaError,match="schema_version"):
		read_manifest(str(path))
	path.write_text(json.dumps(dict(schema_version=1,videos=[dict(id="x",split="train")])))
	with pytest.raises(SchemaError,match="frames"):
		read_manifest(str(path))



@pytest.mark.parametrize("strategy",["first-last","random-pair","stratified"])
def test_two_shot_strategies(full_corpus,strategy):
	manifest=read_manifest(full_corpus)
	out=two_shot_subsample(manifest,strategy,np.random.default_rng(0))
	T=tiny_spec().frames_per_video
	for v in out.split("train"):
		t1,t2=v["labeled_indices"]
		assert 0<=t1<t2<T and sum(v["available"])==2
		if strategy=="first-last":
			assert (t1,t2)==(0,T-1)
		elif strategy=="stratified":
			assert t1<T//2<=t2
	for v in out.split("test"):
		assert all(v["available"])
	assert out.info["strategy"]==strategy
	assert label_fraction(out)==pytest.approx(2./T)
	assert out.info["label_fraction"]==pytest.approx(2./T)
	# the input manifest is left untouched
	assert label_fraction(manifest)==1.



def test_hidden_labels_cannot_be_read(two_shot_corpus):
	videos=load_dataset(two_shot_corpus,"train")
	v=videos[0]
	assert v.supervision_mask(0) is v.gt_masks[0]
	with pytest.raises(LabelAuditError):
		v.supervision_mask(2)
	assert v.reference_mask(2) is not None
	test=load_dataset(two_shot_corpus,"test")
	assert all(m is not None for v in test for m in v.gt_masks)



def test_save_labelset_round_trip(two_shot_corpus,tmp_path):
	manifest=read_manifest(two_shot_corpus)
	videos=load_dataset(manifest,"train")
	v=videos[0]
	T=v.T
	streams=tuple(None if t in (0,T-1) else Stream.FWD_T1 for t in range(T))
	provenance=tuple(Provenance.GROUND_TRUTH if t in (0,T-1) else Provenance.PSEUDO for t in range(T))
	masks=tuple(v.reference_mask(t) for t in range(T))
	labelset=LabelSet(masks,provenance,streams)
	out_dir=str(tmp_path/"pseudo")
	updated=save_labelset(v.video_id,labelset,manifest,out_dir)
	assert os.path.isfile(os.path.join(out_dir,v.video_id,"pseudo","0001.png"))
	assert load_labelsets(manifest)=={}
	updated=write_manifest(updated,os.path.join(out_dir,MANIFEST_NAME))
	loaded=load_labelsets(os.path.join(out_dir,MANIFEST_NAME))
	assert list(loaded)==[v.video_id]
	ls=loaded[v.video_id]
	assert ls.provenance==provenance and ls.source_stream==streams
	assert all(dice(a,b)==1. for a,b in zip(ls.masks,masks))
	# ground truth files were not touched
	assert not os.path.exists(os.path.join(out_dir,v.video_id,"pseudo","0000.png"))



def test_save_labelset_conflicts(two_shot_corpus):
	manifest=read_manifest(two_shot_corpus)
	v=load_dataset(manifest,"train")[0]
	T=v.T
	masks=tuple(v.reference_mask(t) for t in range(T))
	all_pseudo=LabelSet(masks,(Provenance.PSEUDO,)*T,(Stream.FWD_T1,)*T)
	with pytest.raises(ConflictError):
		save_labelset(v.video_id,all_pseudo,manifest)
	all_gt=LabelSet(masks,(Provenance.GROUND_TRUTH,)*T,(None,)*T)
	with pytest.raises(ConflictError):
		save_labelset(v.video_id,all_gt,manifest)



def test_corpus_is_not_trivially_separable(full_corpus):
	# smoothed intensity threshold halfway between background and lesion
	spec=tiny_spec()
	videos=load_dataset(full_corpus)
	cut=spec.background-spec.contrast/2.
	scores=[]
	for v in videos:
		for f,m in zip(v.frames,v.gt_masks):
			pred=ndimage.gaussian_filter(f.pixels,1.)<cut
			scores.append(dice(pred,m))
	assert 0.7<=np.mean(scores)<0.98
