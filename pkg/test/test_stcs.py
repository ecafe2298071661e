import math
import numpy as np
import pytest
import torch

from tsvos.core import Frame
from tsvos.model import init_state
from tsvos.stcs import anchor_affinity, best_match, pcl_loss, consistency_keys, stcs_term, stcs_batch_loss, sample_stcs_indices
from tsvos.errors import ShapeError
from conftest import tiny_config, make_video


def test_anchor_affinity_rows_sum_to_one():
	torch.manual_seed(0)
	A=anchor_affinity(torch.randn(10,4),torch.randn(10,4))
	torch.testing.assert_close(A.sum(-1),torch.ones(10),atol=1e-5,rtol=0.)
	with pytest.raises(ShapeError):
		anchor_affinity(torch.randn(10,4),torch.randn(9,4))



def test_anchor_affinity_worked_example():
	I=torch.eye(2,dtype=torch.float64)
	e=math.e
	A=anchor_affinity(I,I)
	torch.testing.assert_close(A,torch.tensor([[e/(e+1.),1./(e+1.)],[1./(e+1.),e/(e+1.)]],dtype=torch.float64))
	assert float(A[0,0])==pytest.approx(0.7311,abs=1e-4) and float(A[0,1])==pytest.approx(0.2689,abs=1e-4)



def test_best_match_survives_positive_scaling():
	torch.manual_seed(6)
	K_a=torch.randn(12,4,dtype=torch.float64)
	K_tau=torch.randn(12,4,dtype=torch.float64)
	j=best_match(anchor_affinity(K_a,K_tau))
	for c in (0.05,0.5,3.):
		assert torch.equal(best_match(anchor_affinity(c*K_a,K_tau)),j)



def test_best_match_is_argmax_without_gradient():
	A=torch.tensor([[0.1,0.6,0.3],[0.5,0.5,0.],[0.2,0.2,0.6]],requires_grad=True)
	j=best_match(A)
	assert j.tolist()==[1,0,2]
	assert not j.requires_grad



@pytest.mark.parametrize("mean_outside_log",[False,True])
def test_single_patch_loss_is_zero(mean_outside_log):
	loss=pcl_loss(torch.tensor([[0.3,-1.2]]),torch.tensor([[2.,0.5]]),torch.tensor([0]),mean_outside_log)
	assert abs(float(loss))<1e-7



def test_saturated_identical_keys():
	K=torch.tensor([[10.,0.],[0.,10.]],dtype=torch.float64)
	j=best_match(anchor_affinity(K,K))
	assert j.tolist()==[0,1]
	assert float(pcl_loss(K,K,j))==pytest.approx(-math.log(2.),abs=1e-3)
	assert float(pcl_loss(K,K,j,mean_outside_log=True))==pytest.approx(0.,abs=1e-3)



def test_pcl_loss_hand_computed():
	K_t1=torch.tensor([[1.,0.],[0.,1.]],dtype=torch.float64)
	K_tau=torch.tensor([[1.,0.],[1.,1.]],dtype=torch.float64)
	j=torch.tensor([1,0])
	# logits rows: [1,1] and [0,1]
	r=[math.exp(1.)/(math.exp(1.)+math.exp(1.)),math.exp(0.)/(math.exp(0.)+math.exp(1.))]
	assert float(pcl_loss(K_t1,K_tau,j))==pytest.approx(-math.log(sum(r)),abs=1e-12)
	assert float(pcl_loss(K_t1,K_tau,j,True))==pytest.approx(-np.mean(np.log(r)),abs=1e-12)



def test_pcl_loss_rejects_bad_indices():
	K=torch.zeros(3,2)
	with pytest.raises(ShapeError):
		pcl_loss(K,K,torch.tensor([0,1]))
	with pytest.raises(ShapeError):
		pcl_loss(K,K,torch.tensor([0,1,3]))



@pytest.mark.parametrize("mean_outside_log",[False,True])
def test_pcl_loss_gradient_matches_finite_differences(mean_outside_log):
	torch.manual_seed(2)
	K_t1=torch.randn(6,3,dtype=torch.float64,requires_grad=True)
	K_tau=torch.randn(6,3,dtype=torch.float64,requires_grad=True)
	j=torch.tensor([0,3,3,5,1,2])
	assert torch.autograd.gradcheck(lambda a,b: pcl_loss(a,b,j,mean_outside_log),(K_t1,K_tau),eps=1e-5,atol=1e-8,rtol=1e-4)



def test_batched_loss_is_batch_mean():
	torch.manual_seed(3)
	k=[torch.randn(2,5,4) for _ in range(3)]
	total=stcs_batch_loss(*k)
	parts=[stcs_batch_loss(k[0][b],k[1][b],k[2][b]) for b in range(2)]
	torch.testing.assert_close(total,(parts[0]+parts[1])/2.)



def test_stcs_term_trains_the_key_encoder_only(config):
	state=init_state(config)
	video=make_video(T=6)
	loss=stcs_term(video.frames,1,4,state)
	assert torch.isfinite(loss)
	loss.backward()
	assert any(p.grad is not None and p.grad.abs().sum()>0 for p in state.network.key_encoder.parameters())
	assert all(p.grad is None for p in state.network.decoder.parameters())
	assert all(p.grad is None for p in state.network.value_encoder.parameters())



def test_stcs_term_index_checks(config):
	state=init_state(config)
	frames=make_video(T=6).frames
	with pytest.raises(IndexError):
		stcs_term(frames,5,1,state)
	with pytest.raises(IndexError):
		stcs_term(frames,2,3,state)
	with pytest.raises(IndexError):
		stcs_term(frames,2,2,state)
	# the anchor may lie before t
	assert torch.isfinite(stcs_term(frames,3,0,state))



def test_sampled_indices_cover_the_free_range():
	rng=np.random.default_rng(0)
	T=6
	seen=set()
	for _ in range(2000):
		t,tau=sample_stcs_indices(T,rng)
		assert 0<=t<T-1 and 0<=tau<T and tau not in (t,t+1)
		seen.add((t,tau))
	assert len(seen)==sum(T-2 for _ in range(T-1))
	with pytest.raises(ValueError):
		sample_stcs_indices(2,rng)



@pytest.mark.parametrize("mean_outside_log",[False,True])
def test_pcl_loss_permutation_equivariance(mean_outside_log):
	torch.manual_seed(7)
	K_t1=torch.randn(7,3,dtype=torch.float64)
	K_tau=torch.randn(7,3,dtype=torch.float64)
	j=torch.tensor([0,6,2,2,5,1,3])
	perm=torch.randperm(7)
	# anchor patch j moves to position argsort(perm)[j]
	relabeled=torch.argsort(perm)[j]
	torch.testing.assert_close(pcl_loss(K_t1,K_tau[perm],relabeled,mean_outside_log),pcl_loss(K_t1,K_tau,j,mean_outside_log))



def test_no_gradient_through_the_matching():
	torch.manual_seed(5)
	K_t=torch.randn(6,3,requires_grad=True)
	K_t1=torch.randn(6,3,requires_grad=True)
	K_tau=torch.randn(6,3,requires_grad=True)
	for temperature in (None,0.1):
		loss=stcs_batch_loss(K_t,K_t1,K_tau,temperature=temperature)
		g_t,g_t1,g_tau=torch.autograd.grad(loss,(K_t,K_t1,K_tau),allow_unused=True)
		assert g_t is None
		assert g_t1 is not None and g_tau is not None



def test_consistency_keys():
	torch.manual_seed(9)
	K=torch.randn(5,4,dtype=torch.float64)
	K_hat=consistency_keys(K,0.25)
	torch.testing.assert_close(K_hat.norm(dim=-1),torch.full((5,),2.,dtype=torch.float64))
	torch.testing.assert_close(consistency_keys(7.*K,0.25),K_hat)
	with pytest.raises(ValueError):
		consistency_keys(K,0.)



def test_key_norms_do_not_lower_the_consistency_loss():
	torch.manual_seed(8)
	k=[torch.randn(2,9,4,dtype=torch.float64) for _ in range(3)]
	base=stcs_batch_loss(*k,temperature=0.1)
	for c in (0.2,10.,100.):
		torch.testing.assert_close(stcs_batch_loss(*[c*x for x in k],temperature=0.1),base)
	# raw keys: inflating them moves the loss
	assert abs(float(stcs_batch_loss(*[10.*x for x in k]))-float(stcs_batch_loss(*k)))>1e-3
	K_t1=k[1].clone().requires_grad_()
	K_tau=k[2].clone().requires_grad_()
	grads=torch.autograd.grad(stcs_batch_loss(k[0],K_t1,K_tau,temperature=0.1),(K_t1,K_tau))
	# no radial component: a gradient step cannot grow the keys to first order
	for g,K in zip(grads,(K_t1,K_tau)):
		torch.testing.assert_close((g*K).sum(-1),torch.zeros(K.shape[:-1],dtype=torch.float64),atol=1e-10,rtol=0.)



@pytest.mark.parametrize("temperature",[None,0.5])
def test_stcs_term_gradient_matches_finite_differences(temperature):
	state=init_state(tiny_config(pcl_temperature=temperature))
	state.network.double()
	rng=np.random.default_rng(4)
	# 8x8 frames at stride 4: four patches
	frames=[Frame(rng.random((8,8))) for _ in range(4)]
	weight=state.network.key_encoder.layers[-1].weight
	grad,=torch.autograd.grad(stcs_term(frames,0,3,state),weight)
	flat=weight.data.view(-1)
	h=1e-5
	for k in range(0,flat.numel(),max(1,flat.numel()//12)):
		with torch.no_grad():
			flat[k]+=h
			up=float(stcs_term(frames,0,3,state))
			flat[k]-=2*h
			down=float(stcs_term(frames,0,3,state))
			flat[k]+=h
		numeric=(up-down)/(2*h)
		assert abs(numeric-float(grad.view(-1)[k]))<=1e-4*abs(numeric)+1e-7
