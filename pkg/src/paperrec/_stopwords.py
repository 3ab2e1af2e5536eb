"""Bundled English stopword list.

A fixed, versioned list so that preprocessing output is reproducible
bit-for-bit across machines and library versions.  Contraction fragments
("don", "ll", "ve", ...) are listed in their bare form because the
tokenizer only emits alphabetic runs.
"""

STOPWORDS = frozenset(
    """
    a about above after again against ain all also am among an and any are
    aren as at be became because become becomes been before being below
    between beside besides beyond both but by can cannot could couldn did
    didn do does doesn doing don down during each either else ever every few
    for from further had hadn has hasn have haven having he her here hers
    herself him himself his how however i if in into is isn it its itself
    just ll ma may me might mightn more most must mustn my myself needn
    neither no nor not now o of off often on once one only onto or other our
    ours ourselves out over own per rather re s same shall shan she should
    shouldn since so some still such t than that the their theirs them
    themselves then there these they this those though through thus to too
    under until up upon ve very via was wasn we were weren what when where
    whether which while who whom why will with within without won would
    wouldn y yet you your yours yourself yourselves
    """.split()
)
