from . import core
from .api import *
from .errors import *

__version__ = "v1.0.0"
