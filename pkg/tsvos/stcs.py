import math
import torch
import torch.nn.functional as F
from .errors import ShapeError
from .model import as_batch


def _check_keys(name_a,K_a,name_b,K_b):
	try:
		assert K_a.dim()>=2 and K_a.shape==K_b.shape
	except AssertionError:
		raise ShapeError("Error at inputs '%s' and '%s': key maps must share the shape (HW,C_k), got %s and %s" % (name_a,name_b,tuple(K_a.shape),tuple(K_b.shape)))



def anchor_affinity(K_a,K_tau):

	""" anchor_affinity computes the patch affinity of a frame to the anchor frame.
		Inputs:
		- K_a [tensor (...,HW,C_k)]: keys of frame I_t.
		- K_tau [tensor (...,HW,C_k)]: keys of the anchor frame I_tau.
		Outputs:
		- A_s [tensor (...,HW,HW)]: row i = softmax over j of <K_a(i),K_tau(j)>. Rows sum to 1.
		-----------------------------
		This is part of TSVOS"""

	_check_keys("K_a",K_a,"K_tau",K_tau)
	return torch.softmax(torch.matmul(K_a,K_tau.transpose(-1,-2)),dim=-1)



def best_match(A_s):

	""" best_match returns j_star[i]=argmax_j A_s(i,j), the smallest index on ties. The result carries no gradient."""

	return torch.argmax(A_s.detach(),dim=-1)



def pcl_loss(K_t1,K_tau,j_star,mean_outside_log=False):

	""" pcl_loss is the patch contrastive loss between the keys of frame I_{t+1} and the anchor keys.
		For patch i the ratio r_i=exp<K_t1(i),K_tau(j*_i)> / sum_j exp<K_t1(i),K_tau(j)> compares the matched anchor patch (positive) against all the others (negatives).
		Inputs:
		- K_t1 [tensor (...,HW,C_k)]
		- K_tau [tensor (...,HW,C_k)]
		- j_star [integer tensor (...,HW)]: matched anchor patch per patch of I_{t+1}, constant for backpropagation.
		- mean_outside_log=False [bool]:
			-> False: L=-log(sum_i r_i). Negative when HW>1 and the ratios saturate.
			-> True: L=-(1/HW) sum_i log(r_i), bounded below by 0.
		Outputs:
		- loss [scalar tensor]: averaged over leading batch dims if any.
		-----------------------------
		This is part of TSVOS"""

	_check_keys("K_t1",K_t1,"K_tau",K_tau)
	j_star=torch.as_tensor(j_star,device=K_t1.device).long()
	try:
		assert j_star.shape==K_t1.shape[:-1]
		assert j_star.numel()==0 or (int(j_star.min())>=0 and int(j_star.max())<K_tau.shape[-2])
	except AssertionError:
		raise ShapeError("Error at input 'j_star': must hold one valid anchor patch index per patch")
	logits=torch.matmul(K_t1,K_tau.transpose(-1,-2))
	positive=torch.gather(logits,-1,j_star.unsqueeze(-1)).squeeze(-1)
	log_ratio=positive-torch.logsumexp(logits,dim=-1)
	if mean_outside_log:
		loss=-log_ratio.mean(dim=-1)
	else:
		loss=-torch.logsumexp(log_ratio,dim=-1)
	return loss.mean()



def consistency_keys(K,temperature):

	""" consistency_keys projects key vectors on the unit sphere and scales them by 1/sqrt(temperature), so that <a,b> = cos(a,b)/temperature.
		The consistency loss of such keys is invariant to the key norms.
		Inputs:
		- K [tensor (...,HW,C_k)]
		- temperature [float]: > 0.
		Outputs:
		- K_hat [tensor (...,HW,C_k)]
		-----------------------------
		This is part of TSVOS"""

	try:
		assert temperature>0
	except AssertionError:
		raise ValueError("Error at input 'temperature': must be > 0")
	return F.normalize(K,dim=-1)/math.sqrt(temperature)



def stcs_keys(frames,t,tau,state):
	""" Keys of I_t, I_{t+1}, I_tau (each (HW,C_k))."""
	batch=torch.cat([as_batch(frames[k],state) for k in (t,t+1,tau)],0)
	keys=state.network.key(batch)
	return keys[0],keys[1],keys[2]



def stcs_term(frames,t,tau,state,mean_outside_log=None):

	""" stcs_term is the space-time consistency loss of one video for the consecutive pair (t,t+1) and the anchor tau.
		Inputs:
		- frames [sequence of Frame]: the video frames.
		- t [int]: t+1 < T.
		- tau [int]: anchor, tau not in {t,t+1}, anywhere in [0,T).
		- state [ModelState]
		- mean_outside_log=None [bool]: defaults to config.pcl_mean_outside_log.
		Outputs:
		- loss [scalar tensor] = pcl_loss(K_{t+1}, K_tau, best_match(anchor_affinity(K_t, K_tau))), the keys first passed through consistency_keys(K, config.pcl_temperature) unless pcl_temperature is None.
		-----------------------------
		This is part of TSVOS"""

	T=len(frames)
	try:
		assert 0<=t and t+1<T
	except AssertionError:
		raise IndexError("Error at input 't': must satisfy 0 <= t and t+1 < T")
	try:
		assert 0<=tau<T and tau not in (t,t+1)
	except AssertionError:
		raise IndexError("Error at input 'tau': must be in [0,T) and differ from t and t+1")
	if mean_outside_log is None:
		mean_outside_log=state.config.pcl_mean_outside_log
	K_t,K_t1,K_tau=stcs_keys(frames,t,tau,state)
	return stcs_batch_loss(K_t,K_t1,K_tau,mean_outside_log,state.config.pcl_temperature)



def stcs_batch_loss(k_t,k_t1,k_tau,mean_outside_log=False,temperature=None):
	""" Batched stcs over keys (B,HW,C_k), averaged over the batch. Raw keys when temperature is None."""
	if temperature is not None:
		k_t,k_t1,k_tau=(consistency_keys(k,temperature) for k in (k_t,k_t1,k_tau))
	j_star=best_match(anchor_affinity(k_t,k_tau))
	return pcl_loss(k_t1,k_tau,j_star,mean_outside_log)



def sample_stcs_indices(T,rng):

	""" sample_stcs_indices draws t uniformly in [0,T-1) and the anchor tau uniformly in [0,T) minus {t,t+1}.
		Inputs:
		- T [int]: >= 3.
		- rng [numpy Generator]
		Outputs:
		- (t, tau) [ints]
		-----------------------------
		This is part of TSVOS"""

	try:
		assert T>=3
	except AssertionError:
		raise ValueError("Error at input 'T': an anchor frame needs T >= 3")
	t=int(rng.integers(0,T-1))
	tau=int(rng.integers(0,T-2))
	# skip over t and t+1
	if tau>=t:
		tau+=2
	return t,tau
