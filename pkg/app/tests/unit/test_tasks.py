from unittest.mock import MagicMock, patch

from app.core.config import settings
from app.tasks.verification import (
    chunk_bounds,
    classify_codim2_chunk,
    classify_codim2_run,
    run_chunks,
    verify_symmetry_run,
)


class TestChunking:
    def test_chunk_bounds_cover_the_run(self):
        assert chunk_bounds(120, 50) == [
            {"start": 0, "count": 50},
            {"start": 50, "count": 50},
            {"start": 100, "count": 20},
        ]

    def test_chunk_bounds_default_size(self, small_chunks):
        assert [b["count"] for b in chunk_bounds(7)] == [3, 3, 1]

    def test_empty_run(self):
        assert chunk_bounds(0) == []
        assert run_chunks([]) == []


class TestEagerRuns:
    def test_classify_results_do_not_depend_on_chunking(self, eager_celery):
        """Instance k depends only on (seed, k)"""
        whole = classify_codim2_run(1, 5, seed=3)
        original = settings.CHUNK_SIZE
        settings.CHUNK_SIZE = 2
        try:
            chunked = classify_codim2_run(1, 5, seed=3)
        finally:
            settings.CHUNK_SIZE = original
        assert chunked == whole
        assert [r["index"] for r in chunked] == list(range(5))
        assert all(r["verdict"] != "violation" for r in chunked)

    def test_symmetry_run_on_parabola(self, eager_celery, small_chunks, parabola_document):
        results = verify_symmetry_run(parabola_document, 4, seed=1)
        assert [r["index"] for r in results] == [0, 1, 2, 3]
        assert all(r["holds"] for r in results)


class TestDispatch:
    def setup_method(self):
        """Force the distributed branch"""
        self.original_eager = settings.CELERY_TASK_ALWAYS_EAGER
        settings.CELERY_TASK_ALWAYS_EAGER = False

    def teardown_method(self):
        settings.CELERY_TASK_ALWAYS_EAGER = self.original_eager

    @patch("app.tasks.verification.group")
    def test_chunks_are_dispatched_as_a_group(self, mock_group):
        """Results of the group are flattened in chunk order"""
        mock_result = MagicMock()
        mock_result.get.return_value = [[{"index": 0}], [{"index": 1}, {"index": 2}]]
        mock_group.return_value.apply_async.return_value = mock_result

        signatures = [classify_codim2_chunk.s(1, 0, 0, 1), classify_codim2_chunk.s(1, 0, 1, 2)]
        results = run_chunks(signatures)

        mock_group.assert_called_once_with(signatures)
        mock_result.get.assert_called_once_with(disable_sync_subtasks=False)
        assert results == [{"index": 0}, {"index": 1}, {"index": 2}]
