"""Rubrics: parse teacher-authored text, render canonical prompt blocks.

Run:  python demos/01_rubrics.py
"""

from vidaas.rubric import (TEMPLATE_NAMES, Modality, load_template, parse_rubric,
                           render_rubric_prompt, template_text)

print("Bundled rubric templates:")
for name in TEMPLATE_NAMES:
    rubric = load_template(name)
    print(f"  {name:<20} {len(rubric)} criteria")

print("\nA rubric pasted with mixed markers and a wrapped line still parses:")
pasted = """Notes for the grader (ignored preamble)
1. Keep eye contact with
the audience throughout.
- Speak loudly enough to be heard.
• End with a short summary.
"""
rubric = parse_rubric(pasted, Modality.VIDEO, title="presentation")
for criterion in rubric.criteria:
    print(f"  {criterion.ordinal}. {criterion.text}")

print("\nCanonical prompt block (byte-stable, feeds every model call):")
print(render_rubric_prompt(load_template("forklift")))

print("\nRound trip: parsing the rendered block reproduces the criteria:")
rendered = render_rubric_prompt(rubric)
assert [c.text for c in parse_rubric(rendered, Modality.VIDEO).criteria] == \
    [c.text for c in rubric.criteria]
print("  ok")

print("\nFirst lines of the forward-roll template text:")
print("  " + template_text("forward_roll").splitlines()[0])
