import os
import shutil
import math
import warnings
import numpy as np
import pytest
import torch

import tsvos.trainer as trainer
from tsvos.core import Source
from tsvos.data import load_dataset, read_manifest
from tsvos.model import init_state, encode_key
from tsvos.pseudo import OracleTeacher, pseudo_label_dataset
from tsvos.trainer import (LabelAudit, bootstrap_triplet, sample_triplet, seg_loss, batch_loss, build_stage1_batch, build_stage3_batch,
	train_stage1, train_vanilla, train_stage3, train_fully_supervised, ground_truth_labelset, reveal, evaluate_model,
	run_pipeline, read_stage_report, _rng_streams)
from tsvos.errors import ShapeError, LabelAuditError, DivergenceError
from conftest import tiny_config, make_video


def test_bootstrap_triplet():
	rng=np.random.default_rng(0)
	seen=set(bootstrap_triplet(2,7,rng) for _ in range(100))
	assert seen=={(2,2,7),(2,7,7)}
	with pytest.raises(IndexError):
		bootstrap_triplet(3,3,rng)



def test_sample_triplet():
	rng=np.random.default_rng(0)
	for _ in range(500):
		a,b,c=sample_triplet(10,4,rng)
		assert 0<=a<b<c<10 and c-a<=4
	assert sample_triplet(3,2,rng)==(0,1,2)
	with pytest.raises(ValueError):
		sample_triplet(2,2,rng)



def test_seg_loss():
	half=torch.full((2,4,4),0.5,dtype=torch.float64)
	target=torch.randint(0,2,(2,4,4)).to(torch.float64)
	assert float(seg_loss(half,target))==pytest.approx(math.log(2.),abs=1e-9)
	assert float(seg_loss(target,target))<1e-5
	with pytest.raises(ShapeError):
		seg_loss(half,target[:1])
	p=torch.rand(4,4,dtype=torch.float64).mul(0.8).add(0.1).requires_grad_()
	assert torch.autograd.gradcheck(lambda x: seg_loss(x,target[0]),(p,),eps=1e-6,atol=1e-7,rtol=1e-4)



def test_label_audit():
	video=make_video(labeled=(0,5),hidden=True)
	audit=LabelAudit({"v":{0,5}})
	assert audit.read(video,5) is video.gt_masks[5]
	with pytest.raises(LabelAuditError):
		audit.read(video,2)
	with pytest.raises(LabelAuditError):
		LabelAudit().read(video,2)
	assert audit.reads=={("v",5)} and audit.count==1



def test_stage1_reads_only_the_two_labels(two_shot_corpus):
	videos=load_dataset(two_shot_corpus,"train")
	config=tiny_config()
	audit=LabelAudit({v.video_id:set(v.labeled_indices) for v in videos})
	teacher,report=train_stage1(videos,config,audit,iterations=20)
	assert set(audit.per_video().values())=={2} and len(audit.per_video())==len(videos)
	assert report.labels_read==2*len(videos)
	assert report.iterations==20 and teacher.iteration==20
	assert report.stage=="stage1" and math.isfinite(report.loss_seg) and report.loss_pcl!=0.
	assert report.seed==config.rng_seed



def test_vanilla_has_no_consistency_term(two_shot_corpus):
	videos=load_dataset(two_shot_corpus,"train")
	_,report=train_vanilla(videos,tiny_config())
	assert report.stage=="vanilla" and report.loss_pcl==0.



def test_zero_weight_consistency_term_does_not_change_gradients(config):
	videos=[make_video(video_id="a"),make_video(video_id="b",seed=1)]
	batch_rng,aug_rng,stcs_rng=_rng_streams(0,1)
	batch=build_stage1_batch(videos,LabelAudit(),batch_rng,aug_rng,config,stcs_rng)
	assert batch.stcs_frames.shape==(2,3,16,16)
	state=init_state(config)
	total,l_seg,l_pcl=batch_loss(state,batch,0.,True)
	assert l_pcl is not None and torch.isfinite(l_pcl)
	total.backward()
	with_term=[p.grad.clone() for p in state.network.parameters()]
	state.optimizer.zero_grad()
	total,_,l_pcl=batch_loss(state,batch,0.,False)
	assert l_pcl is None
	total.backward()
	for a,p in zip(with_term,state.network.parameters()):
		torch.testing.assert_close(a,p.grad,rtol=0.,atol=1e-12)



def test_consistency_term_ignores_the_key_scale(config):
	videos=[make_video(video_id="a"),make_video(video_id="b",seed=1)]
	batch_rng,aug_rng,stcs_rng=_rng_streams(0,1)
	batch=build_stage1_batch(videos,LabelAudit(),batch_rng,aug_rng,config,stcs_rng)
	state=init_state(config)
	state.network.double()
	_,_,before=batch_loss(state,batch,config.lambda_pcl,True)
	last=state.network.key_encoder.layers[-1]
	with torch.no_grad():
		last.weight.mul_(20.)
		last.bias.mul_(20.)
	_,_,after=batch_loss(state,batch,config.lambda_pcl,True)
	torch.testing.assert_close(after,before,rtol=1e-4,atol=1e-5)



def _mean_key_norm(state,videos):
	with torch.no_grad():
		return float(np.mean([float(encode_key(f,state).norm(dim=-1).mean()) for v in videos for f in v.frames]))



def test_short_consistency_training_keeps_keys_bounded():
	videos=[make_video(video_id="a"),make_video(video_id="b",seed=1)]
	config=tiny_config(lambda_pcl=1.,learning_rate=1e-3)
	with_term,_=train_stage1(videos,config,iterations=30)
	without,_=train_stage1(videos,tiny_config(lambda_pcl=1.,learning_rate=1e-3,use_stcs=False),iterations=30)
	assert _mean_key_norm(with_term,videos)<2.*_mean_key_norm(without,videos)



def test_training_raises_no_tensor_conversion_warnings(config):
	videos=[make_video(video_id="a"),make_video(video_id="b",seed=1)]
	with warnings.catch_warnings(record=True) as caught:
		warnings.simplefilter("always")
		state,_=train_stage1(videos,config,iterations=2)
		encode_key(videos[0].frames[0],state)
	messages=[str(w.message) for w in caught]
	assert not any("not writable" in m or "requires_grad=True to a scalar" in m for m in messages)



def test_stage3_routing(two_shot_corpus):
	videos=load_dataset(two_shot_corpus,"train")
	config=tiny_config(strong_prob=1.,batch_size=4)
	pseudo=pseudo_label_dataset(videos,OracleTeacher(),config)
	full=[ground_truth_labelset(reveal(v)) for v in videos]
	for _ in range(5):
		batch_rng,aug_rng,_=_rng_streams(0,3)
		batch=build_stage3_batch(videos,full,batch_rng,aug_rng,config)
		assert batch.strong_op_count()==0
	batch_rng,aug_rng,stcs_rng=_rng_streams(1,3)
	n_pseudo=0
	for _ in range(5):
		batch=build_stage3_batch(videos,pseudo,batch_rng,aug_rng,config,stcs_rng)
		assert batch.strong_op_count(Source.LABELED)==0
		n_pseudo+=batch.strong_op_count(Source.PSEUDO)
		assert batch.frames.shape==batch.masks.shape==(4,3,32,32)
		assert all(a<b<c and c-a<=config.max_gap for a,b,c in batch.indices)
	assert n_pseudo>0
	batch_rng,aug_rng,_=_rng_streams(1,3)
	batch=build_stage3_batch(videos,pseudo,batch_rng,aug_rng,tiny_config(strong_prob=1.,use_sda=False))
	assert batch.strong_op_count()==0



def test_student_initialization(two_shot_corpus):
	videos=load_dataset(two_shot_corpus,"train")
	labelsets=pseudo_label_dataset(videos,OracleTeacher(),tiny_config())
	teacher=init_state(tiny_config(),seed=0)
	student,report=train_stage3(videos,labelsets,teacher,tiny_config(learning_rate=1e-12),iterations=1)
	assert report.stage=="stage3" and student.seed==1
	assert any(not torch.allclose(a,b) for a,b in zip(teacher.network.parameters(),student.network.parameters()))
	warm,_=train_stage3(videos,labelsets,teacher,tiny_config(learning_rate=1e-12,student_warm_start=True),iterations=1)
	for a,b in zip(teacher.network.parameters(),warm.network.parameters()):
		torch.testing.assert_close(a,b,rtol=0.,atol=1e-8)
	with pytest.raises(ShapeError):
		train_stage3(videos,labelsets[:1],None,tiny_config())



def test_fully_supervised(two_shot_corpus):
	videos=load_dataset(two_shot_corpus,"train")
	with pytest.raises(LabelAuditError):
		train_fully_supervised(videos,tiny_config())
	revealed=[reveal(v) for v in videos]
	a=train_fully_supervised(revealed,tiny_config())
	b=train_fully_supervised(revealed,tiny_config())
	assert a.report.stage=="full"
	for pa,pb in zip(a.network.parameters(),b.network.parameters()):
		assert torch.equal(pa,pb)



def test_divergence_is_reported(two_shot_corpus,monkeypatch):
	videos=load_dataset(two_shot_corpus,"train")
	monkeypatch.setattr(trainer,"seg_loss",lambda probs,masks: probs.sum()*float("nan"))
	with pytest.raises(DivergenceError):
		train_stage1(videos,tiny_config())



def test_evaluate_model(two_shot_corpus):
	test=load_dataset(two_shot_corpus,"test")
	state=init_state(tiny_config())
	report,predictions=evaluate_model(state,test,metadata=dict(name="untrained"),return_predictions=True)
	assert report.metadata["n_videos"]==len(test) and report.metadata["name"]=="untrained"
	assert report.metadata["seed"]==0 and len(report.metadata["config_hash"])==12
	assert predictions[0][0] is test[0].gt_masks[0]
	assert len(predictions[0])==test[0].T
	assert 0.<=report.corpus.JF<=100.



def test_pipeline_with_oracle_teacher_and_resume(two_shot_corpus,tmp_path,monkeypatch):
	out=str(tmp_path/"run")
	config=tiny_config()
	student,reports=run_pipeline(two_shot_corpus,config,out,teacher=OracleTeacher())
	assert "stage1" not in reports
	n_train=len(read_manifest(two_shot_corpus).split("train"))
	assert reports["pseudo"]["pseudo"]==n_train*4 and reports["pseudo"]["ground_truth"]==n_train*2
	assert os.path.isfile(os.path.join(out,"pseudo","manifest.json"))
	assert os.path.isfile(os.path.join(out,"stage3","student.pt"))
	assert read_stage_report(os.path.join(out,"stage3","report.json")).checkpoint==os.path.join(out,"stage3","student.pt")
	shutil.rmtree(os.path.join(out,"stage3"))
	def fail(*args,**kwargs):
		raise AssertionError("pseudo labels must be read back from disk")
	monkeypatch.setattr(trainer,"pseudo_label_dataset",fail)
	again,_=run_pipeline(two_shot_corpus,config,out,teacher=OracleTeacher())
	for a,b in zip(student.network.parameters(),again.network.parameters()):
		assert torch.equal(a,b)



def test_pipeline_is_deterministic(two_shot_corpus,tmp_path):
	config=tiny_config()
	test=load_dataset(two_shot_corpus,"test")
	jsons=[]
	for name in ("a","b"):
		student,reports=run_pipeline(two_shot_corpus,config,str(tmp_path/name))
		assert reports["stage1"].labels_read==2*len(read_manifest(two_shot_corpus).split("train"))
		assert os.path.isfile(str(tmp_path/name/"stage1"/"teacher.pt"))
		jsons.append(evaluate_model(student,test).to_json())
	assert jsons[0]==jsons[1]
