env_global_name: str = 'PERMIX_HOME'
budget_env_name: str = 'PERMIX_BUDGET'

from .exceptions import PermixException  # noqa

from .config import get_homedir, load_configs, get_config, get_settings, Settings  # noqa


__all__ = [
    'PermixException',
    'get_homedir',
    'load_configs',
    'get_config',
    'get_settings',
    'Settings',
]
