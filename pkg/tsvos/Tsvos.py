import os
import logging
from .errors import TsvosError, ConfigError

logger=logging.getLogger(__name__)

class Tsvos:



	def __init__(self,data,config=None,out_dir=None):

		""" Constructor of Tsvos class. It initializes all the variables of the two-shot workflow; each step stores its results in attributes the user can access.
			Required Inputs:
			- data [str or DatasetManifest]: dataset directory, manifest file or manifest object (two-shot subsampled).
			Optional Inputs:
			- config=None [Config]: defaults to Config().
			- out_dir=None [str]: if given, checkpoints, pseudo labels and reports are written there.
			Outputs:
			/
			-----------------------------
			This is part of TSVOS"""

		from .core import Config
		from .data import DatasetManifest

		try:
			assert isinstance(data,(str,os.PathLike,DatasetManifest))
		except AssertionError:
			raise ConfigError("Error at input 'data': must be a path or a DatasetManifest")
		if config is None:
			config=Config()
		try:
			assert isinstance(config,Config)
		except AssertionError:
			raise ConfigError("Error at input 'config': must be a Config")
		self.data=data
		self.config=config
		self.out_dir=out_dir
		# Defined in function 'check_data'
		self.manifest=None
		self.train_videos=None
		self.test_videos=None
		self.label_fraction=None
		self.run_check_data=False
		# Defined in function 'train_teacher'
		self.teacher=None
		self.teacher_report=None
		self.run_train_teacher=False
		# Defined in function 'quadro_inference'
		self.labelsets=None
		self.pseudo_stats=None
		self.run_quadro_inference=False
		# Defined in function 'retrain'
		self.student=None
		self.student_report=None
		self.run_retrain=False
		# Defined in function 'train_full'
		self.full_model=None
		self.run_train_full=False
		# Defined in function 'evaluate'
		self.reports={}
		self.predictions={}



	def check_data(self):

		""" check_data reads the manifest, loads the train and test splits and validates every video.
				-> at least one training video, labeled_indices valid, shapes consistent.
				-> test videos need ground truth on every frame.
			-----------------------------
			This is part of TSVOS"""

		from .core import validate_video
		from .data import DatasetManifest, read_manifest, load_dataset, label_fraction

		self.manifest=self.data if isinstance(self.data,DatasetManifest) else read_manifest(self.data)
		self.train_videos=[validate_video(v) for v in load_dataset(self.manifest,"train")]
		self.test_videos=[validate_video(v) for v in load_dataset(self.manifest,"test")]
		try:
			assert len(self.train_videos)>0
		except AssertionError:
			raise TsvosError("Error: the manifest holds no training video")
		for v in self.test_videos:
			try:
				assert v.full_masks() is not None
			except AssertionError:
				raise TsvosError("Error: test video '%s' lacks ground truth on some frame" % v.video_id)
		for v in self.train_videos:
			if sum(m is not None for m in v.gt_masks)>2:
				logger.warning("training video '%s' exposes more than two labels; only labeled_indices %s are used in stage 1",v.video_id,str(v.labeled_indices))
		self.label_fraction=label_fraction(self.manifest)
		logger.info("%d training videos, %d test videos, training label fraction %.2f%%",len(self.train_videos),len(self.test_videos),100.*self.label_fraction)
		self.run_check_data=True



	def train_teacher(self,vanilla=False,iterations=None):

		""" train_teacher runs stage 1 (two labeled frames per video, bootstrapping, STCS unless vanilla).
			Optional Inputs:
			- vanilla=False: if True, no STCS (two-shot baseline).
			- iterations=None: defaults to config.iterations_stage1.
			-----------------------------
			This is part of TSVOS"""

		from .trainer import train_stage1, train_vanilla, persist_stage

		try:
			assert self.run_check_data is True
		except AssertionError:
			raise TsvosError("Error: Must have run function 'check_data'")
		train=train_vanilla if vanilla else train_stage1
		self.teacher,self.teacher_report=train(self.train_videos,self.config,iterations=iterations)
		if self.out_dir is not None:
			persist_stage(self.teacher,self.teacher_report,os.path.join(self.out_dir,"stage1"),"teacher.pt")
		self.run_train_teacher=True



	def quadro_inference(self,teacher=None):

		""" quadro_inference pseudo-labels every training video with the teacher (or the given stand-in, e.g. OracleTeacher) and merges the four streams.
			-----------------------------
			This is part of TSVOS"""

		from .pseudo import pseudo_label_dataset, provenance_stats
		from .data import save_labelset, write_manifest, MANIFEST_NAME

		if teacher is None:
			try:
				assert self.run_train_teacher is True
			except AssertionError:
				raise TsvosError("Error: Must have run function 'train_teacher' or pass a teacher")
			teacher=self.teacher
		try:
			assert self.run_check_data is True
		except AssertionError:
			raise TsvosError("Error: Must have run function 'check_data'")
		self.labelsets=pseudo_label_dataset(self.train_videos,teacher,self.config,self.config.workers)
		self.pseudo_stats=provenance_stats(self.labelsets)
		if self.out_dir is not None:
			pseudo_dir=os.path.join(self.out_dir,"pseudo")
			manifest=self.manifest
			for video,ls in zip(self.train_videos,self.labelsets):
				manifest=save_labelset(video.video_id,ls,manifest,pseudo_dir)
			write_manifest(manifest,os.path.join(pseudo_dir,MANIFEST_NAME))
		self.run_quadro_inference=True



	def retrain(self,iterations=None):

		""" retrain runs stage 3: a fresh student (or warm start, see Config) trained on the merged label sets with source-dependent augmentation.
			-----------------------------
			This is part of TSVOS"""

		from .trainer import train_stage3, persist_stage

		try:
			assert self.run_quadro_inference is True
		except AssertionError:
			raise TsvosError("Error: Must have run function 'quadro_inference'")
		self.student,self.student_report=train_stage3(self.train_videos,self.labelsets,self.teacher,self.config,iterations)
		if self.out_dir is not None:
			persist_stage(self.student,self.student_report,os.path.join(self.out_dir,"stage3"),"student.pt")
		self.run_retrain=True



	def train_full(self,iterations=None):

		""" train_full trains the fully-supervised reference with every training label revealed (synthetic data only).
			-----------------------------
			This is part of TSVOS"""

		from .trainer import train_fully_supervised, reveal

		try:
			assert self.run_check_data is True
		except AssertionError:
			raise TsvosError("Error: Must have run function 'check_data'")
		self.full_model=train_fully_supervised([reveal(v) for v in self.train_videos],self.config,iterations)
		self.run_train_full=True



	def evaluate(self,which="student",name=None):

		""" evaluate scores a trained model on the test split (first-frame reference).
			Optional Inputs:
			- which="student": "teacher", "student" or "full".
			- name=None: row name stored in the report metadata, default 'which'.
			Outputs:
			- report [MetricReport]: also stored in self.reports[which].
			-----------------------------
			This is part of TSVOS"""

		from .trainer import evaluate_model

		models=dict(teacher=self.teacher,student=self.student,full=self.full_model)
		try:
			assert which in models
		except AssertionError:
			raise ValueError("Error at input 'which': must be 'teacher', 'student' or 'full'")
		try:
			assert models[which] is not None
		except AssertionError:
			raise TsvosError("Error: no '%s' model has been trained" % which)
		fraction=1. if which=="full" else self.label_fraction
		report,predictions=evaluate_model(models[which],self.test_videos,self.config,dict(name=name or which,label_fraction=fraction),return_predictions=True)
		self.reports[which]=report
		self.predictions[which]=predictions
		if self.out_dir is not None:
			os.makedirs(self.out_dir,exist_ok=True)
			report.write_json(os.path.join(self.out_dir,"report_%s.json" % which))
			report.write_csv(os.path.join(self.out_dir,"report_%s.csv" % which))
		return report



	def plot_metric_table(self,fontsize_title=14,fontsize_cells=11):

		""" plot_metric_table draws the comparison table of all evaluated models. Returns plt."""

		from .plots import plot_metric_table

		try:
			assert len(self.reports)>0
		except AssertionError:
			raise TsvosError("Error: Must have run function 'evaluate'")
		return plot_metric_table(list(self.reports.values()),fontsize_title=fontsize_title,fontsize_cells=fontsize_cells)



	def plot_qualitative(self,which=None,frame_indices=None,video_indices=None):

		""" plot_qualitative draws contour strips on test videos for the evaluated models ('which' = list of names, default all). Returns plt."""

		from .plots import plot_qualitative

		if which is None:
			which=list(self.predictions)
		try:
			assert len(which)>0 and all(w in self.predictions for w in which)
		except AssertionError:
			raise TsvosError("Error: Must have run function 'evaluate' for "+", ".join(which or ["a model"]))
		return plot_qualitative(self.test_videos,[self.predictions[w] for w in which],frame_indices,video_indices,names=list(which))
