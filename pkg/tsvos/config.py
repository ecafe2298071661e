import os
import json
import hashlib
import logging
from dataclasses import asdict, fields, replace
from .core import Config
from .errors import ConfigError

logger=logging.getLogger(__name__)

SEED_ENV_VAR="TSVOS_SEED"
_RUNTIME_ONLY=("progress","workers")
# fields a stored checkpoint config takes from the run that loads it
RUNTIME_FIELDS=("progress","workers","device","merge_rule")


def load_config(path=None,overrides=None):

	""" load_config builds a Config from (lowest to highest precedence): built-in defaults, a JSON or TOML file, the TSVOS_SEED environment variable and explicit overrides (CLI flags).
		Inputs:
		- path=None [str or None]: config file, '.json' or '.toml'.
		- overrides=None [dict or None]: field values; entries equal to None are ignored.
		Outputs:
		- config [Config]
		Errors:
		- ConfigError for unreadable files, unknown keys or invalid values.
		-----------------------------
		This is part of TSVOS"""

	params={}
	if path is not None:
		params.update(_read_config_file(path))
	seed=os.environ.get(SEED_ENV_VAR)
	if seed is not None:
		try:
			params["rng_seed"]=int(seed)
		except ValueError:
			raise ConfigError("Error at environment variable '"+SEED_ENV_VAR+"': must be an integer")
		logger.info("seed taken from %s: %s",SEED_ENV_VAR,seed)
	if overrides:
		params.update({k:v for k,v in overrides.items() if v is not None})
	known={f.name for f in fields(Config)}
	unknown=sorted(set(params)-known)
	try:
		assert not unknown
	except AssertionError:
		raise ConfigError("unknown config key(s): "+", ".join(unknown))
	try:
		return Config(**params)
	except TypeError as err:
		raise ConfigError(str(err))



def _read_config_file(path):
	suffix=os.path.splitext(str(path))[1].lower()
	try:
		if suffix==".toml":
			try:
				import tomllib
			except ImportError:
				import tomli as tomllib
			with open(path,"rb") as f:
				data=tomllib.load(f)
		elif suffix==".json":
			with open(path,"r") as f:
				data=json.load(f)
		else:
			raise ConfigError("config file must end with .json or .toml: "+str(path))
	except (OSError,ValueError) as err:
		if isinstance(err,ConfigError):
			raise
		raise ConfigError("cannot read config file "+str(path)+": "+str(err))
	try:
		assert isinstance(data,dict)
	except AssertionError:
		raise ConfigError("config file "+str(path)+" must hold a table/object at top level")
	return data



def config_hash(config):
	""" First 12 hex chars of the sha256 of the canonical JSON of the config. Fields that cannot change results (progress bars, worker count) are left out."""
	data={k:v for k,v in asdict(config).items() if k not in _RUNTIME_ONLY}
	blob=json.dumps(data,sort_keys=True,separators=(",",":"))
	return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]



def config_to_dict(config):
	return asdict(config)



def config_from_dict(data):
	known={f.name for f in fields(Config)}
	return Config(**{k:v for k,v in data.items() if k in known})



def with_overrides(config,**changes):
	return replace(config,**changes)



def with_runtime(stored,current):
	""" Copy of the stored config with the RUNTIME_FIELDS of the current one."""
	return replace(stored,**{name:getattr(current,name) for name in RUNTIME_FIELDS})
