import csv
import json
from dataclasses import dataclass, field, asdict

CSV_HEADER=("video_id","J","F","JF","DSC","HD")


@dataclass(frozen=True)
class VideoMetrics:

	""" Metrics of one video (or the corpus mean). J, F, JF, DSC are in [0,100]; HD in pixels."""

	video_id: str
	J: float
	F: float
	JF: float
	DSC: float
	HD: float
	n_frames: int=0
	n_empty_hd: int=0



@dataclass(frozen=True)
class MetricReport:

	""" Per-video rows, the corpus row (means over videos) and metadata (seed, config hash, n_videos, ...)."""

	videos: tuple
	corpus: VideoMetrics
	metadata: dict=field(default_factory=dict)

	def to_dict(self):
		return dict(videos=[asdict(v) for v in self.videos],corpus=asdict(self.corpus),metadata=dict(self.metadata))

	def to_json(self):
		return json.dumps(self.to_dict(),sort_keys=True,indent=1)

	def write_json(self,path):
		with open(path,"w") as f:
			f.write(self.to_json())

	def write_csv(self,path):
		with open(path,"w",newline="") as f:
			writer=csv.writer(f)
			writer.writerow(CSV_HEADER)
			for row in tuple(self.videos)+(self.corpus,):
				writer.writerow([row.video_id]+[repr(float(getattr(row,k))) for k in CSV_HEADER[1:]])

	@classmethod
	def from_dict(cls,data):
		return cls(tuple(VideoMetrics(**v) for v in data["videos"]),VideoMetrics(**data["corpus"]),dict(data.get("metadata",{})))



def read_report(path):
	with open(path,"r") as f:
		return MetricReport.from_dict(json.load(f))



def format_table(reports,names=None,label_fractions=None):

	""" format_table renders MetricReports as a markdown table with the columns Method | Labeled data | J&F | J | F | DSC | HD.
		Inputs:
		- reports [list of MetricReport]
		- names=None [list of str]: row names, default metadata['name'] or 'run k'.
		- label_fractions=None [list of float in [0,1] or None]: default metadata['label_fraction'].
		Outputs:
		- table [str]
		-----------------------------
		This is part of TSVOS"""

	lines=["| Method | Labeled data | J&F | J | F | DSC | HD |","|---|---|---|---|---|---|---|"]
	for k,report in enumerate(reports):
		name=names[k] if names is not None else report.metadata.get("name","run %d" % (k+1))
		fraction=label_fractions[k] if label_fractions is not None else report.metadata.get("label_fraction")
		fraction="-" if fraction is None else "%.1f%%" % (100.*fraction)
		c=report.corpus
		lines.append("| %s | %s | %.1f | %.1f | %.1f | %.1f | %.2f |" % (name,fraction,c.JF,c.J,c.F,c.DSC,c.HD))
	return "\n".join(lines)
