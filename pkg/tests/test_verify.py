import pytest

from nvneumann import bie, verify


@pytest.fixture(scope="module")
def results():
    return verify.run()


class TestSuite:
    def test_all_pass(self, results):
        assert len(results) >= 40
        assert [r.name for r in results if not r.passed] == []

    def test_names_unique(self):
        names = [c[0] for c in verify.CHECKS]
        assert len(names) == len(set(names))

    def test_filter(self):
        res = verify.run("steklov")
        assert res and all("steklov" in r.name for r in res)

    def test_fault_injection(self):
        res = verify.run("jump", faults={"kprime_sign"})
        failed = {r.name for r in res if not r.passed}
        assert "jump.kprime_row_sum" in failed
        assert not bie.FAULTS

    def test_tol_scale(self):
        res = verify.run("geometry.circle", tol_scale=10.0)
        assert res[0].tol == pytest.approx(1e-11)

    def test_table(self, results):
        text = verify.format_table(results)
        assert text.splitlines()[0].split()[:4] == ["check", "expected", "got", "tol"]
        assert text.endswith(f"{len(results)}/{len(results)} checks passed")

    def test_crashing_check_fails(self, monkeypatch):
        def boom():
            raise RuntimeError("kaput")
        monkeypatch.setattr(verify, "CHECKS", [("x.boom", 1.0, boom)])
        (r,) = verify.run()
        assert not r.passed and "kaput" in r.error
