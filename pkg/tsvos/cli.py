""" Command-line entry point: tsvos {gen-data, train, pseudo, eval, plot, pipeline, ablate}.

Exit codes: 0 success, 2 user/config error, 3 runtime/model error.
-----------------------------
This is part of TSVOS"""

import os
import sys
import json
import hashlib
import argparse
import logging
import numpy as np
from .errors import TsvosError, ConfigError, SchemaError, ShapeError, DivergenceError, CheckpointError

logger=logging.getLogger(__name__)

EXIT_OK=0
EXIT_USER=2
EXIT_RUNTIME=3
LOG_FORMAT="%(asctime)s %(levelname)s %(name)s: %(message)s"


def _add_common(parser):
	parser.add_argument("--config",default=None,help="JSON or TOML file with Config fields")
	parser.add_argument("--seed",type=int,default=None,help="overrides rng_seed (and TSVOS_SEED)")
	parser.add_argument("--workers",type=int,default=None,help="0 = strictly deterministic single worker")
	parser.add_argument("--iterations",type=int,default=None,help="iterations of every training stage")
	parser.add_argument("--device",default=None)
	parser.add_argument("--no-progress",action="store_true",help="disable progress bars")
	parser.add_argument("--verbose","-v",action="store_true")



def build_parser():
	parser=argparse.ArgumentParser(prog="tsvos",description="Two-shot self-training video object segmentation on synthetic ultrasound-like videos")
	sub=parser.add_subparsers(dest="command",required=True)

	p=sub.add_parser("gen-data",help="generate a synthetic corpus and keep two labels per training video")
	p.add_argument("--spec",default=None,help="JSON file with SyntheticSpec fields")
	p.add_argument("--out",required=True)
	p.add_argument("--strategy",default="first-last",choices=["first-last","random-pair","stratified","none"])
	_add_common(p)

	p=sub.add_parser("train",help="train one model")
	p.add_argument("--mode",required=True,choices=["teacher","retrain","full","vanilla"])
	p.add_argument("--data",required=True,help="dataset directory or manifest")
	p.add_argument("--out",required=True)
	p.add_argument("--labels",default=None,help="pseudo-label manifest (retrain)")
	p.add_argument("--init",default=None,help="teacher checkpoint used for a warm start (retrain)")
	_add_common(p)

	p=sub.add_parser("pseudo",help="quadro-inference pseudo labelling of the training split")
	p.add_argument("--checkpoint",required=True)
	p.add_argument("--data",required=True)
	p.add_argument("--out",required=True,help="output directory or manifest file")
	p.add_argument("--oracle",action="store_true",help="write an oracle checkpoint at --checkpoint first")
	_add_common(p)

	p=sub.add_parser("eval",help="first-frame-referenced evaluation on the test split")
	p.add_argument("--checkpoint",required=True)
	p.add_argument("--data",required=True)
	p.add_argument("--out",required=True,help="output directory (report.json, report.csv)")
	p.add_argument("--name",default=None,help="method name stored in the report")
	_add_common(p)

	p=sub.add_parser("plot",help="comparison table and qualitative strips")
	p.add_argument("--reports",nargs="+",required=True)
	p.add_argument("--names",nargs="+",default=None)
	p.add_argument("--out",required=True)
	p.add_argument("--data",default=None,help="dataset, for qualitative strips")
	p.add_argument("--checkpoints",nargs="+",default=None,help="models drawn in the qualitative strips")
	p.add_argument("--videos",type=int,nargs="+",default=None,help="test video indices of the strips")
	_add_common(p)

	p=sub.add_parser("pipeline",help="stage 1 -> pseudo labels -> stage 3, then evaluation")
	p.add_argument("--data",required=True)
	p.add_argument("--out",required=True)
	p.add_argument("--oracle",action="store_true",help="use ground truth instead of a trained teacher")
	_add_common(p)

	p=sub.add_parser("ablate",help="Baseline / +STCS / +STCS+SDA / fully supervised")
	p.add_argument("--data",required=True)
	p.add_argument("--out",required=True)
	p.add_argument("--no-full",action="store_true",help="skip the fully-supervised row")
	_add_common(p)
	return parser



def make_config(args):
	""" Config from --config, TSVOS_SEED and the command-line overrides (highest precedence)."""
	from .config import load_config
	overrides=dict(rng_seed=args.seed,workers=args.workers,device=args.device)
	if args.iterations is not None:
		overrides.update(iterations_stage1=args.iterations,iterations_stage3=args.iterations)
	if args.no_progress:
		overrides["progress"]=False
	return load_config(args.config,overrides)



def _file_hash(path):
	with open(path,"rb") as f:
		return hashlib.sha256(f.read()).hexdigest()[:12]



def cmd_gen_data(args):
	from .data import SyntheticSpec, generate_synthetic, two_shot_subsample, write_manifest, label_fraction, MANIFEST_NAME
	params={}
	if args.spec is not None:
		try:
			with open(args.spec,"r") as f:
				params=json.load(f)
		except (OSError,ValueError) as err:
			raise ConfigError("cannot read spec file %s: %s" % (args.spec,err))
	if args.seed is not None:
		params["rng_seed"]=args.seed
	try:
		spec=SyntheticSpec(**params).check()
	except (TypeError,ValueError) as err:
		raise ConfigError(str(err))
	manifest=generate_synthetic(spec,args.out,workers=args.workers or 0,progress=not args.no_progress)
	if args.strategy!="none":
		rng=np.random.default_rng(np.random.SeedSequence([spec.rng_seed,7]))
		manifest=two_shot_subsample(manifest,args.strategy,rng)
	path=os.path.join(args.out,MANIFEST_NAME)
	write_manifest(manifest,path)
	T=spec.frames_per_video
	print("videos: %d train, %d test, %d frames each, %dx%d" % (spec.n_train,spec.n_test,T,spec.image_size,spec.image_size))
	print("strategy: %s" % args.strategy)
	print("training label fraction: %.2f%% (%d labeled frames of %d)" % (100.*label_fraction(manifest),round(label_fraction(manifest)*spec.n_train*T),spec.n_train*T))
	print("manifest: %s (sha256 %s)" % (path,_file_hash(path)))
	return EXIT_OK



def cmd_train(args):
	from .data import read_manifest, load_dataset, load_labelsets
	from .model import load_checkpoint
	from .trainer import train_stage1, train_vanilla, train_stage3, train_fully_supervised, persist_stage
	config=make_config(args)
	manifest=read_manifest(args.data)
	videos=load_dataset(manifest,"train")
	if args.mode=="teacher":
		state,report=train_stage1(videos,config)
	elif args.mode=="vanilla":
		state,report=train_vanilla(videos,config)
	elif args.mode=="full":
		partial=[v.video_id for v in videos if any(m is None for m in v.gt_masks)]
		if partial:
			raise SchemaError("--mode full needs ground truth on every training frame; %d video(s) are two-shot (e.g. '%s')" % (len(partial),partial[0]),args.data)
		state=train_fully_supervised(videos,config)
		report=state.report
	else:
		if args.labels is None:
			raise ConfigError("--mode retrain needs --labels (manifest written by 'tsvos pseudo')")
		labels=read_manifest(args.labels)
		videos=load_dataset(labels,"train")
		labelsets=load_labelsets(labels)
		missing=[v.video_id for v in videos if v.video_id not in labelsets]
		if missing:
			raise SchemaError("no complete label set for video '%s'" % missing[0],args.labels)
		teacher=load_checkpoint(args.init,config) if args.init is not None else None
		state,report=train_stage3(videos,labelsets,teacher,config)
	report=persist_stage(state,report,args.out,"checkpoint.pt")
	print(json.dumps(report.to_dict(),sort_keys=True,indent=1))
	return EXIT_OK



def cmd_pseudo(args):
	from .data import read_manifest, load_dataset, save_labelset, write_manifest, MANIFEST_NAME
	from .pseudo import pseudo_label_dataset, provenance_stats, load_teacher, save_oracle_checkpoint
	from .metrics import dice
	config=make_config(args)
	if args.oracle:
		os.makedirs(os.path.dirname(os.path.abspath(args.checkpoint)),exist_ok=True)
		save_oracle_checkpoint(args.checkpoint)
	teacher=load_teacher(args.checkpoint,config)
	manifest=read_manifest(args.data)
	videos=load_dataset(manifest,"train")
	labelsets=pseudo_label_dataset(videos,teacher,config,config.workers)
	if args.out.endswith(".json"):
		out_manifest=args.out
		out_dir=os.path.dirname(os.path.abspath(args.out))
	else:
		out_dir=args.out
		out_manifest=os.path.join(out_dir,MANIFEST_NAME)
	for video,ls in zip(videos,labelsets):
		manifest=save_labelset(video.video_id,ls,manifest,out_dir)
	write_manifest(manifest,out_manifest)
	stats=provenance_stats(labelsets)
	print("frames: %d, ground truth: %.2f%%, pseudo: %.2f%%" % (stats["frames"],100.*stats["ground_truth_fraction"],100.*stats["pseudo_fraction"]))
	print("stream selection: "+", ".join("%s=%d" % (k,v) for k,v in stats["streams"].items()))
	scores=[]
	for video,ls in zip(videos,labelsets):
		for t in range(len(ls)):
			ref=video.reference_mask(t)
			if ls.source_stream[t] is not None and ref is not None:
				scores.append(dice(ls.masks[t],ref))
	if scores:
		print("merged pseudo-label DSC vs ground truth: %.4f" % float(np.mean(scores)))
	print("manifest: %s" % out_manifest)
	return EXIT_OK



def _write_report(report,out_dir):
	os.makedirs(out_dir,exist_ok=True)
	report.write_json(os.path.join(out_dir,"report.json"))
	report.write_csv(os.path.join(out_dir,"report.csv"))



def cmd_eval(args):
	from .data import read_manifest, load_dataset, label_fraction
	from .model import load_checkpoint
	from .trainer import evaluate_model
	config=make_config(args)
	state=load_checkpoint(args.checkpoint,config)
	manifest=read_manifest(args.data)
	test=load_dataset(manifest,"test")
	if not test:
		raise SchemaError("the manifest has no test video",args.data)
	name=args.name or os.path.splitext(os.path.basename(args.checkpoint))[0]
	report=evaluate_model(state,test,config,dict(name=name,label_fraction=label_fraction(manifest)))
	_write_report(report,args.out)
	c=report.corpus
	print("J&F %.2f  J %.2f  F %.2f  DSC %.2f  HD %.2f" % (c.JF,c.J,c.F,c.DSC,c.HD))
	return EXIT_OK



def cmd_plot(args):
	import matplotlib
	matplotlib.use("Agg")
	from .metrics import read_report, format_table
	from .plots import plot_metric_table, plot_qualitative
	reports=[read_report(p) for p in args.reports]
	if args.names is not None and len(args.names)!=len(reports):
		raise ConfigError("--names must give one name per report")
	os.makedirs(args.out,exist_ok=True)
	with open(os.path.join(args.out,"metric_table.md"),"w") as f:
		f.write(format_table(reports,args.names)+"\n")
	plt=plot_metric_table(reports,args.names)
	plt.savefig(os.path.join(args.out,"metric_table.png"),bbox_inches="tight",dpi=150)
	plt.close("all")
	print(format_table(reports,args.names))
	if args.checkpoints:
		if args.data is None:
			raise ConfigError("--checkpoints needs --data")
		from .data import read_manifest, load_dataset
		from .model import load_checkpoint
		from .trainer import predict_video
		test=load_dataset(read_manifest(args.data),"test")
		video_indices=args.videos or list(range(min(3,len(test))))
		if any(not 0<=k<len(test) for k in video_indices):
			raise IndexError("--videos must lie in [0,%d)" % len(test))
		predictions=[]
		for path in args.checkpoints:
			state=load_checkpoint(path)
			# videos outside the strip are not segmented
			predictions.append([predict_video(state,v) if k in video_indices else [None]*v.T for k,v in enumerate(test)])
		names=[os.path.splitext(os.path.basename(p))[0] for p in args.checkpoints]
		plt=plot_qualitative(test,predictions,video_indices=video_indices,names=names)
		plt.savefig(os.path.join(args.out,"qualitative.png"),bbox_inches="tight",dpi=150)
		plt.close("all")
	return EXIT_OK



def cmd_pipeline(args):
	from .data import read_manifest, load_dataset, label_fraction
	from .pseudo import OracleTeacher
	from .trainer import run_pipeline, evaluate_model
	config=make_config(args)
	manifest=read_manifest(args.data)
	student,reports=run_pipeline(manifest,config,args.out,OracleTeacher() if args.oracle else None)
	test=load_dataset(manifest,"test")
	if test:
		report=evaluate_model(student,test,config,dict(name="pipeline",label_fraction=label_fraction(manifest)))
		_write_report(report,args.out)
		print("J&F %.2f  J %.2f  F %.2f  DSC %.2f  HD %.2f" % (report.corpus.JF,report.corpus.J,report.corpus.F,report.corpus.DSC,report.corpus.HD))
	print(json.dumps(reports["pseudo"],sort_keys=True))
	return EXIT_OK



def cmd_ablate(args):
	import matplotlib
	matplotlib.use("Agg")
	from .data import read_manifest
	from .metrics import format_table
	from .plots import plot_metric_table
	from .trainer import run_ablation
	config=make_config(args)
	reports=run_ablation(read_manifest(args.data),config,args.out,include_full=not args.no_full)
	table=format_table(list(reports.values()))
	with open(os.path.join(args.out,"metric_table.md"),"w") as f:
		f.write(table+"\n")
	plt=plot_metric_table(list(reports.values()))
	plt.savefig(os.path.join(args.out,"metric_table.png"),bbox_inches="tight",dpi=150)
	plt.close("all")
	print(table)
	return EXIT_OK



COMMANDS={
	"gen-data":cmd_gen_data,
	"train":cmd_train,
	"pseudo":cmd_pseudo,
	"eval":cmd_eval,
	"plot":cmd_plot,
	"pipeline":cmd_pipeline,
	"ablate":cmd_ablate,
}


def main(argv=None):

	""" main parses the command line, runs the subcommand and returns its exit code."""

	args=build_parser().parse_args(argv)
	logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,format=LOG_FORMAT)
	try:
		return COMMANDS[args.command](args)
	except CheckpointError as err:
		logger.error("%s",err)
		return EXIT_RUNTIME
	except (ConfigError,SchemaError,ShapeError,IndexError) as err:
		logger.error("%s",err)
		return EXIT_USER
	except (DivergenceError,OSError) as err:
		logger.error("%s",err)
		return EXIT_RUNTIME
	except TsvosError as err:
		logger.error("%s: %s",type(err).__name__,err)
		return EXIT_RUNTIME



if __name__=="__main__":
	sys.exit(main())
