"""Cross-domain speech enhancement experiments.

The compiled core links libtorch; importing torch first puts its shared
libraries in the process so the extension resolves against them.
"""

import torch as _torch  # noqa: F401

from ._core import *  # noqa: F401,F403
from ._core import Error, __doc__  # noqa: F401

FRAMEWORKS = ("wiener", "segan", "wavenet", "cd_wavenet", "fsegan", "aegan", "cd_aegan")
