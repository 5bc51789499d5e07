"""Walkthrough: comment-level corpus transformations.

Takes one solver program with English inline comments and derives the three
comment treatments used when building dataset variants: stripped, swapped
for translations, and round-tripped unchanged.

Run: python demos/comment_transforms_demo.py
"""

from mpot import extract_comments, replace_comments, strip_comments

PROGRAM = """\
def solver():
    # Roger started with 5 tennis balls.
    tennis_balls = 5
    # 2 cans of 3 tennis balls each is
    bought_balls = 2 * 3
    # tennis balls. The answer is
    answer = tennis_balls + bought_balls
    return answer
"""

GERMAN = [" Roger hatte anfangs 5 Tennisbälle.", " 2 Dosen mit je 3 Bällen sind", " Tennisbälle. Die Antwort ist"]


def main():
    spans = extract_comments(PROGRAM)
    print(f"found {len(spans)} comments:")
    for span in spans:
        print(f"  bytes {span.start}-{span.end} own_line={span.own_line}: {span.text!r}")

    print("\n--- comments removed ---")
    print(strip_comments(PROGRAM))

    print("--- comments in German ---")
    print(replace_comments(PROGRAM, GERMAN))

    restored = replace_comments(PROGRAM, [span.body for span in spans])
    print(f"identity replacement is byte-exact: {restored == PROGRAM}")


if __name__ == "__main__":
    main()
