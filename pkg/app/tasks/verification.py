from typing import Any, Dict, List, Sequence

import numpy as np
from celery import Task, group
from celery.canvas import Signature
from celery.utils.log import get_task_logger

from app.core.celery_app import celery_app
from app.core.config import settings
from app.geometry.codim2_classifier import ScalarMode, classify_instance, sample_instance
from app.geometry.sigma_surface import sample_points, verify_extrinsic_symmetry
from app.schemas.geometry import surface_from_document

# Use the celery task logger which is already properly configured
logger = get_task_logger(__name__)


class VerificationTask(Task):
    """Base task for verification batches"""

    def on_failure(self, exc, task_id, args, kwargs, einfo):
        logger.error(f"Verification task {task_id} failed: {exc}")
        super().on_failure(exc, task_id, args, kwargs, einfo)

    def on_success(self, retval, task_id, args, kwargs):
        logger.debug(f"Verification task {task_id} returned {len(retval)} results")
        return super().on_success(retval, task_id, args, kwargs)


@celery_app.task(bind=True, base=VerificationTask)
def classify_codim2_chunk(self, n: int, seed: int, start: int, count: int, mode: str = "exact") -> List[Dict[str, Any]]:
    """
    Sample and classify instances start..start+count-1 of a seeded run.

    Instance k depends only on (seed, k), so results do not depend on how a
    run is cut into chunks.
    """
    logger.info(f"Classifying codimension-two instances {start}..{start + count - 1} (n={n}, seed={seed})")
    results = []
    for index in range(start, start + count):
        inst = sample_instance(n, seed, index, ScalarMode(mode))
        results.append(classify_instance(inst, index, seed))
    return results


@celery_app.task(bind=True, base=VerificationTask)
def verify_symmetry_chunk(
    self, surface_payload: Dict[str, Any], seed: int, start: int, count: int
) -> List[Dict[str, Any]]:
    """Check S_x(Sigma) = Sigma on pairs (x, y) start..start+count-1 sampled from Sigma"""
    surf = surface_from_document(surface_payload)
    logger.info(f"Verifying symmetry on pairs {start}..{start + count - 1} (seed={seed})")
    results = []
    for index in range(start, start + count):
        rng = np.random.default_rng([seed, index])
        x, y = sample_points(surf, 2, rng)
        check = verify_extrinsic_symmetry(surf, x, y)
        results.append({"index": index, **check.to_dict()})
    return results


def chunk_bounds(total: int, chunk_size: int = 0) -> List[Dict[str, int]]:
    size = chunk_size or settings.CHUNK_SIZE
    return [{"start": start, "count": min(size, total - start)} for start in range(0, total, size)]


def run_chunks(signatures: Sequence[Signature]) -> List[Dict[str, Any]]:
    """
    Run chunk signatures and concatenate their results in chunk order.

    In eager mode each signature is applied in-process; otherwise the chunks
    are dispatched as a group to the verification queue and gathered.
    """
    if not signatures:
        return []
    if settings.CELERY_TASK_ALWAYS_EAGER:
        chunks = [signature.apply().get() for signature in signatures]
    else:
        logger.info(f"Dispatching {len(signatures)} chunks to the verification queue")
        chunks = group(signatures).apply_async().get(disable_sync_subtasks=False)
    return [result for chunk in chunks for result in chunk]


def classify_codim2_run(n: int, count: int, seed: int, mode: str = "exact") -> List[Dict[str, Any]]:
    signatures = [classify_codim2_chunk.s(n, seed, b["start"], b["count"], mode) for b in chunk_bounds(count)]
    return run_chunks(signatures)


def verify_symmetry_run(surface_payload: Dict[str, Any], count: int, seed: int) -> List[Dict[str, Any]]:
    signatures = [verify_symmetry_chunk.s(surface_payload, seed, b["start"], b["count"]) for b in chunk_bounds(count)]
    return run_chunks(signatures)
