""" Figures: metric comparison table and qualitative contour strips.
-----------------------------
This is part of TSVOS"""

import numpy as np
from .core import Mask
from .metrics.report import format_table


def plot_metric_table(reports,names=None,label_fractions=None,fontsize_title=14,fontsize_cells=11,title="Segmentation results on the test split"):

	""" plot_metric_table draws the comparison table (Method | Labeled data | J&F | J | F | DSC | HD) of several runs as a figure.
		Required Inputs:
		- reports [list of MetricReport]
		Optional Inputs:
		- names=None [list of str]: row names, default metadata['name'].
		- label_fractions=None [list of float]: default metadata['label_fraction'].
		- fontsize_title=14: fontsize for the figure title.
		- fontsize_cells=11: fontsize for the table cells.
		- title: figure title.
		Outputs:
		- plt: matplotlib.pyplot object that gives the user an access to the figure.
			-> plt.show(): to draw the figure
			-> plt.savefig(figname.png): to save a figure
		-----------------------------
		This is part of TSVOS"""

	import matplotlib.pyplot as plt

	try:
		assert len(reports)>=1
	except AssertionError:
		raise ValueError("Error at input 'reports': at least one MetricReport is required")
	try:
		assert names is None or len(names)==len(reports)
	except AssertionError:
		raise ValueError("Error at input 'names': must have one name per report")
	# reuse the markdown layout, one row per run
	lines=format_table(reports,names,label_fractions).split("\n")
	header=[c.strip() for c in lines[0].strip("|").split("|")]
	rows=[[c.strip() for c in line.strip("|").split("|")] for line in lines[2:]]
	fig=plt.figure(figsize=(1.3*len(header),0.5*(len(rows)+2)))
	ax=fig.add_subplot(111)
	ax.axis("off")
	table=ax.table(cellText=rows,colLabels=header,loc="center",cellLoc="center")
	table.auto_set_font_size(False)
	table.set_fontsize(fontsize_cells)
	table.scale(1.,1.4)
	for k in range(len(header)):
		table[0,k].set_text_props(fontweight="bold")
	# best J&F in bold
	jf=[r.corpus.JF for r in reports]
	best=int(np.argmax(jf))
	table[best+1,2].set_text_props(fontweight="bold")
	plt.title(title,fontsize=fontsize_title)
	return plt



def plot_qualitative(videos,predictions,frame_indices=None,video_indices=None,names=None,gt_color="lime",pred_color="red",linewidth=1.0,fontsize_title=10):

	""" plot_qualitative draws, for selected videos, a strip of frames with the ground-truth contour and the predicted contour(s) overlaid.
		Required Inputs:
		- videos [list of VideoSample]: ground truth available on the shown frames.
		- predictions [list of mask sequences, or list of such lists]: one sequence per video (one method), or one list of sequences per method.
		Optional Inputs:
		- frame_indices=None [list of int]: frames shown, default 5 evenly spaced frames.
		- video_indices=None [list of int]: videos shown, default the first 3.
		- names=None [list of str]: method names for the legend (several methods).
		- gt_color="lime", pred_color="red" [matplotlib colors or list of colors for several methods]
		- linewidth=1.0, fontsize_title=10
		Outputs:
		- plt: matplotlib.pyplot object.
		-----------------------------
		This is part of TSVOS"""

	import matplotlib.pyplot as plt
	from matplotlib.lines import Line2D

	if len(predictions)>0 and len(predictions[0])>0 and isinstance(predictions[0][0],(Mask,np.ndarray)):
		predictions=[predictions]
	if video_indices is None:
		video_indices=list(range(min(3,len(videos))))
	T=videos[video_indices[0]].T
	if frame_indices is None:
		frame_indices=sorted(set(int(round(x)) for x in np.linspace(0,T-1,5)))
	if isinstance(pred_color,str):
		pred_color=[pred_color] if len(predictions)==1 else plt.rcParams["axes.prop_cycle"].by_key()["color"][1:len(predictions)+1]
	try:
		assert all(0<=t<T for t in frame_indices)
	except AssertionError:
		raise ValueError("Error at input 'frame_indices': must lie in [0,%d)" % T)
	nrows=len(video_indices)
	ncols=len(frame_indices)
	fig,axes=plt.subplots(nrows,ncols,figsize=(1.6*ncols,1.6*nrows),squeeze=False)
	for r,k in enumerate(video_indices):
		video=videos[k]
		for c,t in enumerate(frame_indices):
			ax=axes[r][c]
			ax.imshow(video.frames[t].pixels,cmap="gray",vmin=0.,vmax=1.)
			gt=video.reference_mask(t)
			if gt is not None and gt.area>0:
				ax.contour(gt.pixels,levels=[0.5],colors=gt_color,linewidths=linewidth)
			for m,seq in enumerate(predictions):
				pred=seq[k][t]
				pred=pred.pixels if isinstance(pred,Mask) else np.asarray(pred)
				if pred.any():
					ax.contour(pred,levels=[0.5],colors=pred_color[m],linewidths=linewidth)
			ax.set_xticks([])
			ax.set_yticks([])
			if r==0:
				ax.set_title("t=%d" % t,fontsize=fontsize_title)
			if c==0:
				ax.set_ylabel(video.video_id,fontsize=fontsize_title)
	handles=[Line2D([0],[0],color=gt_color,lw=linewidth,label="ground truth")]
	for m in range(len(predictions)):
		label=names[m] if names is not None else ("prediction" if len(predictions)==1 else "method %d" % (m+1))
		handles.append(Line2D([0],[0],color=pred_color[m],lw=linewidth,label=label))
	fig.legend(handles=handles,loc="lower center",ncol=len(handles),fontsize="small",frameon=False)
	fig.tight_layout(rect=(0.,0.06,1.,1.))
	return plt
