import logging
from pathlib import Path
from typing import Any, List, Optional, Tuple

from config import resolve_cache_dir
from exceptions import MissingCacheError, PreconditionError
from models import QuadratureSpec
from special_functions.kernel import KernelEvaluator, kernel_evaluator
from utils import stable_hash
from weights import build_weight
from weights.regularity import check_regularity
from weights.weight import Weight

logger = logging.getLogger(__name__)

# assumptions a non-raw weight must pass before its kernel is cached
REQUIRED_ASSUMPTIONS = ["curvature_small", "sector_epsilon"]


def cache_path(ke: KernelEvaluator, cache_dir) -> Path:
    """kernel_<hash>.csv, the hash taken over weight, kind and quadrature."""
    return Path(cache_dir) / f"kernel_{stable_hash(ke.cache_id)}.csv"


def attach_kernel(w: Weight, cache_dir=None, kind: str = "K", quad: Optional[QuadratureSpec] = None,
                  offline: bool = False) -> KernelEvaluator:
    """
    The shared kernel evaluator of a weight with its cache loaded from disk, or built and written.

    Raises:
        MissingCacheError: if offline and no matching cache file exists.
    """
    ke = kernel_evaluator(w, kind, quad)
    if ke.log_t is not None:
        return ke
    path = cache_path(ke, resolve_cache_dir(cache_dir))
    if path.exists() and ke.load_csv(path):
        return ke
    if offline:
        raise MissingCacheError(f"No kernel cache for {ke} at {path} (offline mode)")
    logger.info(f"Cache miss for {ke}: building {path.name}")
    ke.ensure_cache()
    ke.export_csv(path)
    return ke


def regularity_flags(w: Weight) -> List[str]:
    """
    Names of the failed regularity assumptions.

    Raises:
        PreconditionError: if a Denjoy or derived weight fails a required assumption.
    """
    report = check_regularity(w)
    failed = [name for name, entry in report.entries.items() if entry.verdict == "fail"]
    if w.kind != "raw":
        missing = [name for name in REQUIRED_ASSUMPTIONS if name in failed]
        if missing:
            raise PreconditionError(f"{w.canonical()} fails {', '.join(missing)}: no kernel cache is written")
    return failed


def cache_kernel(spec: Any, t_range: Optional[Tuple[float, float]] = None, quad: Optional[QuadratureSpec] = None,
                 cache_dir=None, kind: str = "K", offline: bool = False) -> Path:
    """
    Write the kernel cache of a weight as CSV with the canonical header.

    An existing file whose header matches is left untouched. Failed regularity assumptions
    are logged and recorded in a `flags` header line; raw families such as L = rho + 1 still
    get a cache. Values requested in t_range beyond the cached grid come from the
    saddle-point main term, which is flagged as `asymptotic_tail`.

    Args:
        spec (Any): weight as WeightSpec, dict, JSON text or canonical string.
        t_range (tuple, optional): (t_min, t_max) that the cache is meant to cover.
        quad (QuadratureSpec, optional): tolerances and grid density.
        cache_dir (optional): directory; RESUM_CACHE_DIR overrides it.
        kind (str): K or Kstar.
        offline (bool): refuse to compute a missing cache.

    Returns:
        Path: the cache file.

    Raises:
        MissingCacheError: if offline and the file is absent.
        PreconditionError: if a Denjoy or derived weight fails a required regularity check.
        OSError: file system errors are not caught.
    """
    w = build_weight(spec)
    ke = kernel_evaluator(w, kind, quad)
    path = cache_path(ke, resolve_cache_dir(cache_dir))
    if path.exists() and ke.load_csv(path):
        logger.info(f"{path.name} is up to date for {ke}; not rewritten")
        return path
    if offline:
        raise MissingCacheError(f"No kernel cache for {ke} at {path} (offline mode)")

    flags = regularity_flags(w)
    if flags:
        logger.warning(f"{w.canonical()} fails {', '.join(flags)}; caching {kind} anyway")
    ke.ensure_cache()
    if t_range is not None:
        t_min, t_max = map(float, t_range)
        if t_min < ke.t_lo:
            logger.warning(f"t_min={t_min:g} is below the cached grid start {ke.t_lo:g}")
            flags.append("extrapolated_head")
        if t_max > ke.t_hi:
            flags.append("asymptotic_tail")
    header = {"flags": ",".join(flags) or "none"}
    if t_range is not None:
        header["t_range"] = f"{t_range[0]:g},{t_range[1]:g}"
    return ke.export_csv(path, extra_header=header)
