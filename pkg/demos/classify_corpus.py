"""Shell-orbit labels for every hinted region of the corpus."""
from limitmeasure import builtin_corpus, classify_region
from limitmeasure.regions import describe

for spec in builtin_corpus():
    for lr in spec.metadata.invariant_regions:
        if lr.hint is None:
            continue
        h = lr.hint
        c = classify_region(spec, lr.region, h.shell_delta, h.n_samples, h.escape_T, h.dt)
        mark = "ok " if c.label == lr.label else "!! "
        print(f"{mark}{spec.name:26s} {describe(lr.region):60s} {c.label}")
