"""Walkthrough: majority voting vs. quality-weighted voting.

Builds a small candidate set by hand, then shows how the two aggregation
strategies can disagree: the most frequent answer is wrong, but the
highest-quality answer group is right.

Run: python demos/voting_demo.py
"""

from decimal import Decimal

from mpot import Candidate, ExecutionOutcome, majority_vote, soft_vote


def candidate(index, value=None, status="ok", ice=None):
    outcome = ExecutionOutcome(status, value=Decimal(value) if value is not None else None)
    return Candidate(index=index, completion=f"sample {index}", outcome=outcome, ice=ice)


def main():
    # five samples for one question whose true answer is 11: three agree on
    # a sloppy wrong answer, two well-reviewed ones agree on the right one
    candidates = [
        candidate(0, "14", ice=1),
        candidate(1, "11", ice=4),
        candidate(2, "14", ice=2),
        candidate(3, status="runtime_error", ice=0),
        candidate(4, "14", ice=1),
        candidate(5, "11", ice=4),
    ]

    hard = majority_vote(candidates)
    soft = soft_vote(candidates)

    print("candidates:")
    for cand in candidates:
        print(f"  #{cand.index}: status={cand.outcome.status:15s} value={cand.outcome.value} score={cand.ice}")
    print()
    for result in (hard, soft):
        groups = ", ".join(
            f"{g.answer} (count {g.count}, mean score {g.mean_ice})" for g in result.groups
        )
        print(f"{result.method:8s} -> chosen {result.chosen}   groups: {groups}")
    print()
    print("majority voting follows the crowd; quality weighting follows the reviews.")


if __name__ == "__main__":
    main()
