""" Matching-based segmentation backbone.

Key and value encoders map a frame to a patch grid (stride 'patch_stride'), the memory read-out
aggregates the memory values with a softmax affinity over memory keys, and the decoder turns the
read-out (plus the query frame as a skip input) into a per-pixel lesion probability.

Tensor conventions: frames and masks are (B,1,H_img,W_img); keys (B,HW,C_k); values (B,HW,C_v);
affinities (B,N_mem*HW,HW), columns indexing query patches.
-----------------------------
This is part of TSVOS"""

import os
import json
import math
import pickle
import logging
import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from dataclasses import dataclass
from .core import Frame, Mask, Direction, binarize
from .errors import ShapeError, ConfigError, CheckpointError, EmptyMemoryError

logger=logging.getLogger(__name__)

CHECKPOINT_FORMAT="tsvos-checkpoint-1"


class ConvEncoder(nn.Module):

	""" Stack of log2(stride) stride-2 3x3 convolutions, ReLU between layers, linear last layer."""

	def __init__(self,in_channels,out_channels,stride,width):
		super().__init__()
		n_layers=int(round(math.log2(stride)))
		channels=[in_channels]+[width*2**k for k in range(n_layers-1)]+[out_channels]
		self.layers=nn.ModuleList([nn.Conv2d(channels[k],channels[k+1],3,stride=2,padding=1) for k in range(n_layers)])

	def forward(self,x):
		for k,layer in enumerate(self.layers):
			x=layer(x)
			if k<len(self.layers)-1:
				x=F.relu(x)
		# (B,C,H,W) -> (B,HW,C)
		return x.flatten(2).transpose(1,2)



class Decoder(nn.Module):

	""" Two stages: a 3x3 conv on the read-out grid upsampled to full resolution, then a 3x3 conv over [upsampled features, query frame] and a 1x1 output conv with sigmoid."""

	def __init__(self,value_dim,width):
		super().__init__()
		self.conv_grid=nn.Conv2d(value_dim,2*width,3,padding=1)
		self.conv_full=nn.Conv2d(2*width+1,width,3,padding=1)
		self.conv_out=nn.Conv2d(width,1,1)

	def forward(self,v_q,skip,grid):
		B=v_q.shape[0]
		h=v_q.transpose(1,2).reshape(B,v_q.shape[2],grid[0],grid[1])
		h=F.relu(self.conv_grid(h))
		h=F.interpolate(h,size=skip.shape[-2:],mode="bilinear",align_corners=False)
		h=F.relu(self.conv_full(torch.cat([h,skip],1)))
		return torch.sigmoid(self.conv_out(h))



class MatchingNetwork(nn.Module):

	def __init__(self,config,width=1):
		super().__init__()
		hidden=config.hidden_dim*width
		self.patch_stride=config.patch_stride
		self.key_dim=config.key_dim
		self.value_dim=config.value_dim
		self.width=width
		self.key_encoder=ConvEncoder(1,config.key_dim,config.patch_stride,hidden)
		self.value_encoder=ConvEncoder(2,config.value_dim,config.patch_stride,hidden)
		self.decoder=Decoder(config.value_dim,hidden)

	def grid(self,shape):
		H,W=shape[-2:]
		try:
			assert H%self.patch_stride==0 and W%self.patch_stride==0
		except AssertionError:
			raise ShapeError("Error: frame dims %s must be divisible by patch_stride=%d" % (str((H,W)),self.patch_stride))
		return (H//self.patch_stride,W//self.patch_stride)

	def key(self,frames):
		self.grid(frames.shape)
		return self.key_encoder(frames)

	def value(self,frames,masks):
		try:
			assert frames.shape==masks.shape
		except AssertionError:
			raise ShapeError("Error: frame shape %s and mask shape %s differ" % (tuple(frames.shape),tuple(masks.shape)))
		self.grid(frames.shape)
		return self.value_encoder(torch.cat([frames,masks],1))

	def decode(self,v_q,frames):
		grid=self.grid(frames.shape)
		try:
			assert v_q.shape[1]==grid[0]*grid[1] and v_q.shape[2]==self.value_dim
		except AssertionError:
			raise ShapeError("Error: read-out of shape %s does not match grid %s and value_dim %d" % (tuple(v_q.shape),str(grid),self.value_dim))
		return self.decoder(v_q,frames,grid)



def read_memory(k_q,k_m,v_m):

	""" read_memory is the batched read-out V_q = V_m A.
		Inputs:
		- k_q [tensor (B,HW,C_k)]: query keys.
		- k_m [tensor (B,M,C_k)]: memory keys, M=N_mem*HW.
		- v_m [tensor (B,M,C_v)]: memory values.
		Outputs:
		- A [tensor (B,M,HW)]: affinity, softmax over the memory axis of <k_m,k_q>/sqrt(C_k); columns sum to 1.
		- v_q [tensor (B,HW,C_v)]: read-out features.
		-----------------------------
		This is part of TSVOS"""

	logits=torch.matmul(k_m,k_q.transpose(1,2))/math.sqrt(k_q.shape[-1])
	A=torch.softmax(logits,dim=1)
	v_q=torch.matmul(A.transpose(1,2),v_m)
	return A,v_q



@dataclass
class ModelState:

	""" Learnable parameters (network), optimizer state and iteration counter of one model."""

	network: MatchingNetwork
	config: object
	optimizer: object=None
	iteration: int=0
	seed: int=0
	width: int=1
	report: object=None

	@property
	def dtype(self):
		return next(self.network.parameters()).dtype

	@property
	def device(self):
		return next(self.network.parameters()).device

	def parameter_count(self):
		return sum(p.numel() for p in self.network.parameters())

	def rollout(self,video,reference,direction,memory_every=None):
		return rollout(video,reference,direction,self,memory_every)



def init_state(config,width=1,seed=None):

	""" init_state builds a fresh ModelState (network + Adam optimizer). The network initialization is seeded.
		Inputs:
		- config [Config]
		- width=1 [int]: channel multiplier of the hidden layers.
		- seed=None [int]: defaults to config.rng_seed.
		Outputs:
		- state [ModelState]
		-----------------------------
		This is part of TSVOS"""

	if seed is None:
		seed=config.rng_seed
	torch.manual_seed(seed)
	network=MatchingNetwork(config,width).to(config.device)
	optimizer=torch.optim.Adam(network.parameters(),lr=config.learning_rate,weight_decay=config.weight_decay)
	return ModelState(network=network,config=config,optimizer=optimizer,iteration=0,seed=seed,width=width)



def as_batch(x,state):
	""" Frame, Mask, numpy array or tensor -> tensor (B,1,H,W) with the dtype/device of the state."""
	if isinstance(x,(Frame,Mask)):
		x=x.pixels
	if isinstance(x,np.ndarray):
		# Frame pixels are read-only
		x=torch.from_numpy(np.array(x,dtype=np.float64,copy=True))
	x=x.to(dtype=state.dtype,device=state.device)
	while x.dim()<4:
		x=x.unsqueeze(0)
	return x



class MemoryBank:

	""" Ordered memory entries (K_m, V_m, mask). The first pinned entry is never evicted; other entries leave first-in first-out once 'capacity' is reached."""

	def __init__(self,capacity=8):
		try:
			assert capacity>=1
		except AssertionError:
			raise ValueError("Error at input 'capacity': must be >= 1")
		self.capacity=capacity
		self.entries=[]
		self.pinned=0

	def __len__(self):
		return len(self.entries)

	def add(self,k,v,mask=None,pinned=False):
		if pinned:
			self.entries.insert(self.pinned,(k,v,mask))
			self.pinned+=1
		else:
			self.entries.append((k,v,mask))
		while len(self.entries)>self.capacity:
			if self.pinned>=len(self.entries):
				raise ValueError("MemoryBank: more pinned entries than capacity")
			del self.entries[self.pinned]

	def keys(self):
		return torch.cat([e[0] for e in self.entries],0)

	def values(self):
		return torch.cat([e[1] for e in self.entries],0)



def encode_key(frame,state):

	""" encode_key returns the key vectors K (HW,C_k) of a frame.
		Inputs:
		- frame [Frame, array or tensor (H,W)]: dims divisible by patch_stride.
		- state [ModelState]
		Outputs:
		- K [tensor (HW,C_k)]: differentiable w.r.t. the state.
		-----------------------------
		This is part of TSVOS"""

	return state.network.key(as_batch(frame,state))[0]



def encode_value(frame,mask,state):

	""" encode_value returns the mask-conditioned value vectors V (HW,C_v) of a frame.
		Inputs:
		- frame [Frame, array or tensor (H,W)]
		- mask [Mask, array or tensor (H,W)]: binary mask or soft probabilities, same shape as frame.
		- state [ModelState]
		Outputs:
		- V [tensor (HW,C_v)]
		-----------------------------
		This is part of TSVOS"""

	frame=as_batch(frame,state)
	mask=as_batch(mask,state)
	return state.network.value(frame,mask)[0]



def memory_read(K_q,bank):

	""" memory_read reads the memory bank for one query frame.
		Inputs:
		- K_q [tensor (HW,C_k)]
		- bank [MemoryBank]: non-empty.
		Outputs:
		- V_q [tensor (HW,C_v)]: stacked V_m weighted by A.
		- A [tensor (N_mem*HW,HW)]: column-stochastic affinity.
		Errors:
		- EmptyMemoryError if the bank holds no entry.
		-----------------------------
		This is part of TSVOS"""

	if len(bank)==0:
		raise EmptyMemoryError("memory_read: the memory bank is empty")
	K_m=bank.keys()
	try:
		assert K_m.shape[-1]==K_q.shape[-1]
	except AssertionError:
		raise ShapeError("memory_read: key dims differ (%d vs %d)" % (K_m.shape[-1],K_q.shape[-1]))
	A,V_q=read_memory(K_q.unsqueeze(0),K_m.unsqueeze(0),bank.values().unsqueeze(0))
	return V_q[0],A[0]



def decode(V_q,skip,state):

	""" decode maps a read-out (HW,C_v) and the query frame to a probability map (H_img,W_img) in [0,1]."""

	return state.network.decode(V_q.unsqueeze(0),as_batch(skip,state))[0,0]



def segment_step(frame,bank,state):

	""" segment_step = encode_key -> memory_read -> decode.
		Inputs:
		- frame [Frame]: query frame.
		- bank [MemoryBank]
		- state [ModelState]
		Outputs:
		- prob [tensor (H_img,W_img)]
		- K_q [tensor (HW,C_k)]: kept for memory updates and STCS.
		- A [tensor (N_mem*HW,HW)]
		-----------------------------
		This is part of TSVOS"""

	K_q=encode_key(frame,state)
	V_q,A=memory_read(K_q,bank)
	return decode(V_q,frame,state),K_q,A



def traversal(T,index,direction):
	""" Frame indices visited by a rollout from 'index' (reference excluded)."""
	if direction is Direction.FORWARD:
		return list(range(index+1,T))
	return list(range(index-1,-1,-1))



def rollout(video,reference,direction,state,memory_every=None,capacity=None,on_step=None):

	""" rollout segments a video sequentially from a reference frame, forward or backward in time.
		Inputs:
		- video [VideoSample]
		- reference [(int, Mask)]: reference frame index and its mask.
		- direction [Direction]
		- state [ModelState]: read-only here.
		- memory_every=None [int]: a new memory entry (frame + predicted mask) every 'memory_every' frames. Defaults to config.memory_every.
		- capacity=None [int]: memory capacity, defaults to config.memory_capacity. The reference entry is pinned.
		- on_step=None [callable(t,bank)]: called after each frame, e.g. to inspect the memory.
		Outputs:
		- probs [list of 2-dim numpy arrays]: one probability map per non-reference frame, in traversal order.
		-----------------------------
		This is part of TSVOS"""

	index,mask=reference
	T=video.T
	try:
		assert 0<=index<T
	except AssertionError:
		raise IndexError("rollout: reference index %d out of range [0,%d)" % (index,T))
	config=state.config
	if memory_every is None:
		memory_every=config.memory_every
	if capacity is None:
		capacity=config.memory_capacity
	probs=[]
	was_training=state.network.training
	state.network.eval()
	with torch.no_grad():
		bank=MemoryBank(capacity)
		ref_frame=video.frames[index]
		bank.add(encode_key(ref_frame,state),encode_value(ref_frame,mask,state),mask,pinned=True)
		for step,t in enumerate(traversal(T,index,direction),start=1):
			prob,K_q,_=segment_step(video.frames[t],bank,state)
			if step%memory_every==0:
				predicted=binarize(prob,config.threshold)
				bank.add(K_q,encode_value(video.frames[t],predicted,state),predicted)
			probs.append(prob.cpu().numpy().astype(np.float64))
			if on_step is not None:
				on_step(t,bank)
	state.network.train(was_training)
	return probs



def save_checkpoint(state,path,config_hash=None):

	""" save_checkpoint writes parameters, optimizer state and a JSON header {format, config hash, iteration, seed, width, config} into one torch archive."""

	from .config import config_to_dict, config_hash as make_hash
	header=dict(format=CHECKPOINT_FORMAT,kind="model",iteration=state.iteration,seed=state.seed,width=state.width,
		config_hash=config_hash or make_hash(state.config),config=config_to_dict(state.config))
	blob=dict(header=json.dumps(header,sort_keys=True),network=state.network.state_dict())
	if state.optimizer is not None:
		blob["optimizer"]=state.optimizer.state_dict()
	torch.save(blob,path)
	logger.debug("checkpoint written to %s (iteration %d)",path,state.iteration)



def read_checkpoint_header(path):
	""" (header dict, raw archive). FileNotFoundError for a missing file, CheckpointError for a file that is not a TSVOS checkpoint."""
	if not os.path.isfile(path):
		raise FileNotFoundError("no checkpoint at "+str(path))
	try:
		blob=torch.load(path,map_location="cpu")
		header=json.loads(blob["header"])
		assert isinstance(header,dict)
	except (pickle.UnpicklingError,RuntimeError,EOFError,ValueError,TypeError,KeyError,IndexError,AttributeError,AssertionError) as err:
		raise CheckpointError("not a readable TSVOS checkpoint (%s: %s)" % (type(err).__name__,err),path)
	try:
		assert header.get("format")==CHECKPOINT_FORMAT
	except AssertionError:
		raise CheckpointError("unknown checkpoint format %s" % repr(header.get("format")),path)
	return header,blob



def load_checkpoint(path,config=None):

	""" load_checkpoint restores a ModelState written by save_checkpoint.
		Inputs:
		- path [str]
		- config=None [Config]: config of the loading run. The network is always built from the config stored in the header; only the runtime fields (workers, progress bars, device, merge rule) are taken from 'config'.
		Outputs:
		- state [ModelState]
		Errors:
		- FileNotFoundError if 'path' does not exist.
		- CheckpointError if the file is not a model checkpoint or its weights do not fit the stored architecture.
		-----------------------------
		This is part of TSVOS"""

	from .config import config_from_dict, config_hash, with_runtime
	header,blob=read_checkpoint_header(path)
	try:
		assert header.get("kind")=="model"
	except AssertionError:
		raise CheckpointError("not a model checkpoint (kind %s)" % repr(header.get("kind")),path)
	try:
		stored=config_from_dict(header["config"])
		width,iteration,seed=header["width"],header["iteration"],header["seed"]
	except (KeyError,TypeError,ConfigError) as err:
		raise CheckpointError("incomplete checkpoint header (%s)" % err,path)
	if config is None:
		config=stored
	else:
		if config_hash(with_runtime(stored,config))!=config_hash(config):
			logger.info("%s: network built from its stored config, runtime fields from the current run",path)
		config=with_runtime(stored,config)
	network=MatchingNetwork(config,width)
	try:
		network.load_state_dict(blob["network"])
	except (KeyError,RuntimeError) as err:
		raise CheckpointError("weights do not fit the stored architecture (%s)" % str(err).splitlines()[0],path)
	network.to(config.device)
	optimizer=torch.optim.Adam(network.parameters(),lr=config.learning_rate,weight_decay=config.weight_decay)
	if "optimizer" in blob:
		try:
			optimizer.load_state_dict(blob["optimizer"])
		except (KeyError,ValueError) as err:
			raise CheckpointError("optimizer state does not fit the network (%s)" % err,path)
	return ModelState(network=network,config=config,optimizer=optimizer,iteration=iteration,seed=seed,width=width)
