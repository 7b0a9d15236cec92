"""Collects one line per acceptance criterion for the end-of-run summary."""
RESULTS: dict[int, str] = {}


def record(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> bool:
    within = elapsed < budget
    verdict = "PASS" if ok and within else "FAIL"
    RESULTS[number] = f"criterion {number:>2}: {verdict}  {detail}  [{elapsed:.2f} s / budget {budget:g} s]"
    print(RESULTS[number])
    return ok and within
