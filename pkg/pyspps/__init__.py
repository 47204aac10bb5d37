# flake8: noqa

from .bounded import *
from .exception import *
from .oracle import *
from .problem import *
from .scalar import *
from .seed import *
from .seqgrid import *
from .serialization import *
from .spectral import *
from .spps import *
