"""M-band discrete wavelet packet transforms for stationary processes.

Modules:

* :mod:`mwpt.path_algebra` -- node indices, paths, the frequency-ordering
  permutation ``G`` and band geometry (exact rationals).
* :mod:`mwpt.filter_bank` -- paraunitary M-band banks: Daubechies, Shannon,
  user files.
* :mod:`mwpt.wpt` -- packet analysis/synthesis on periodic sequences.
* :mod:`mwpt.synth` -- band-limited test processes and exact Shannon-node
  statistics.
* :mod:`mwpt.diagnostics` -- autocorrelation, cumulants, whiteness and
  Gaussianity scores, the packet spectrum estimator.
* :mod:`mwpt.experiments`, :mod:`mwpt.cli` -- Monte Carlo experiments and the
  ``mwpt`` command.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    FilterFileError,
    IncompleteCover,
    MWPTError,
    ParaunitaryError,
    PathExhausted,
)
from .path_algebra import (  # noqa: E402
    Band,
    NodeIndex,
    PathSpec,
    band,
    classify_path,
    gray_inverse_table,
    gray_permute,
    gray_table,
    omega_of_path,
    shift_parameter,
)
from .filter_bank import (  # noqa: E402
    FilterBank,
    builtin_bank,
    builtin_names,
    check_paraunitary,
    load_bank,
    resolve_bank,
    save_bank,
    shannon_distance,
)
from .wpt import PacketTree, decompose, decompose_shannon, node_sequence, reconstruct  # noqa: E402
from .synth import (  # noqa: E402
    SpectrumSpec,
    band_average,
    gaussian_realization,
    linear_process,
    shannon_autocorr,
)
from .diagnostics import (  # noqa: E402
    autocorr,
    cumulants,
    estimate_spectrum,
    gaussianity_score,
    node_report,
    whiteness_score,
)
