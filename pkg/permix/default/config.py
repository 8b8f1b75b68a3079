import json
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from . import env_global_name, budget_env_name
from .exceptions import ConfigError

configs: Dict[str, Dict[str, Any]] = {}
logger = logging.getLogger('Config')


def get_homedir() -> Path:
    if not os.environ.get(env_global_name):
        # Try to open a .env file in the home directory if it exists.
        if (Path(__file__).resolve().parent.parent.parent / '.env').exists():
            with (Path(__file__).resolve().parent.parent.parent / '.env').open() as f:
                for line in f:
                    if '=' not in line:
                        continue
                    key, value = line.strip().split('=', 1)
                    if value and value[0] in ['"', "'"]:
                        value = value[1:-1]
                    os.environ[key] = value

    if not os.environ.get(env_global_name):
        guessed_home = Path(__file__).resolve().parent.parent.parent
        logger.warning(f"{env_global_name} is missing, using {guessed_home}. \
Set it with: export {env_global_name}='{guessed_home}'")
        os.environ[env_global_name] = str(guessed_home)
    return Path(os.environ[env_global_name])


def load_configs(path_to_config_files: Optional[Union[str, Path]]=None) -> None:
    global configs
    if configs:
        return
    if path_to_config_files:
        if isinstance(path_to_config_files, str):
            config_path = Path(path_to_config_files)
        else:
            config_path = path_to_config_files
    else:
        config_path = get_homedir() / 'config'
    if not config_path.exists():
        raise ConfigError(f'Configuration directory {config_path} does not exists.')
    elif not config_path.is_dir():
        raise ConfigError(f'Configuration directory {config_path} is not a directory.')

    configs = {}
    for path in config_path.glob('*.json'):
        with path.open() as _c:
            configs[path.stem] = json.load(_c)


def get_config(config_type: str, entry: str, quiet: bool=False) -> Any:
    '''Get an entry from the given config_type file. Automatic fallback to the sample file'''
    global configs
    if not configs:
        load_configs()
    if config_type in configs:
        if entry in configs[config_type]:
            return configs[config_type][entry]
        else:
            if not quiet:
                logger.warning(f'Unable to find {entry} in config file.')
    else:
        if not quiet:
            logger.warning(f'No {config_type} config file available.')
    if not quiet:
        logger.warning(f'Falling back on sample config, please initialize the {config_type} config file.')
    sample_path = get_homedir() / 'config' / f'{config_type}.json.sample'
    if not sample_path.exists():
        raise ConfigError(f'No sample config at {sample_path}.')
    with sample_path.open() as _c:
        sample_config = json.load(_c)
    if entry not in sample_config:
        raise ConfigError(f'{entry} is missing in {sample_path}.')
    return sample_config[entry]


@dataclass(frozen=True)
class Settings:
    '''Tolerances and size caps shared by every module.

    The defaults match config/generic.json.sample; a budget preset overrides the caps.
    '''
    budget: str = 'small'
    validation_tol: float = 1e-10
    comparison_tol: float = 1e-8
    brute_force_n: int = 10
    enumeration_cells: int = 10**7
    permanent_n: int = 28
    interpolation_exact_n: int = 10
    series_budget: int = 10**7
    r_ell_budget: int = 10**6
    esp_n_max: int = 64
    hadamard_ell: int = 22
    worst_case_size: int = 64
    gh_nodes: int = 200
    poisson_tail_mass: float = 1e-12
    capacity_restarts: int = 32
    capacity_iterations: int = 200
    mc_samples: int = 20000
    mc_instances: int = 4
    random_instances: int = 50
    esp_verify_n_max: int = 16
    esp_trials: int = 1000
    hadamard_trials: int = 500
    toy_n_max: int = 10**4
    threads: int = 1


def _apply(base: Settings, overrides: Dict[str, Any]) -> Settings:
    known = {f.name: f.type for f in fields(Settings)}
    clean: Dict[str, Any] = {}
    for key, value in overrides.items():
        if key not in known:
            logger.warning(f'Ignoring unknown settings entry {key}.')
            continue
        clean[key] = value
    return replace(base, **clean)


def get_settings(budget: Optional[str]=None, **overrides: Any) -> Settings:
    '''Resolve the budget (argument, then PERMIX_BUDGET, then config default) into Settings'''
    try:
        tolerances = get_config('generic', 'tolerances', quiet=True)
        presets = get_config('generic', 'budgets', quiet=True)
        default_budget = get_config('generic', 'default_budget', quiet=True)
    except ConfigError as e:
        logger.warning(f'{e} Using built-in settings.')
        tolerances, presets, default_budget = {}, {}, Settings.budget

    name = budget or os.environ.get(budget_env_name) or default_budget
    if presets and name not in presets:
        raise ConfigError(f'Unknown budget {name}, expected one of {sorted(presets)}.')
    settings = Settings(budget=name,
                        validation_tol=float(tolerances.get('validation', Settings.validation_tol)),
                        comparison_tol=float(tolerances.get('comparison', Settings.comparison_tol)))
    settings = _apply(settings, presets.get(name, {}))
    return _apply(settings, {k: v for k, v in overrides.items() if v is not None})
