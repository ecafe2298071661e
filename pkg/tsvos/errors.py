""" Exceptions raised by TSVOS. Input checks follow the pattern

	try:
		assert <condition>
	except AssertionError:
		raise SomeError("Error at input 'x': must be ...")

so that the messages read the same everywhere in the package.
-----------------------------
This is part of TSVOS"""


class TsvosError(Exception):
	pass


class ShapeError(TsvosError, ValueError):
	pass


class ConfigError(TsvosError, ValueError):
	pass


class EmptyMemoryError(TsvosError):
	pass


class CoverageError(TsvosError):
	pass


class MixSourceError(TsvosError):
	pass


class EmptyMaskError(TsvosError):
	pass


class DivergenceError(TsvosError):
	pass


class ConflictError(TsvosError):
	pass


class LabelAuditError(TsvosError):
	pass


class SchemaError(TsvosError, ValueError):

	def __init__(self,message,path=None):
		if path is not None:
			message=str(path)+": "+message
		super().__init__(message)
		self.path=path


class CheckpointError(SchemaError):

	""" A checkpoint file exists but cannot be restored. The command line treats it like a missing checkpoint."""



class AggregateError(TsvosError):

	""" Collects per-video failures. 'errors' is a list of (video_id, exception)."""

	def __init__(self,errors):
		self.errors=list(errors)
		lines=["%s: %s: %s" % (vid,type(err).__name__,err) for vid,err in self.errors]
		super().__init__("%d video(s) failed\n" % len(self.errors)+"\n".join(lines))
