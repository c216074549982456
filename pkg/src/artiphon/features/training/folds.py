"""
Speaker-independent, gender-balanced cross-validation folds.

Two policies:

- ``disjoint`` (default): every fold holds out one male and one female
  speaker for test and the next pair in rotation for validation; all other
  speakers train. With 5 + 5 speakers and k = 5 that is 6/2/2 and every
  speaker is tested exactly once.
- ``paper-literal``: one male and one female speaker are held out and
  train is everyone else (8 of 10). Validation and test are disjoint halves
  of the held-out speakers' utterances, so the two roles share speaker
  identity.
"""

import enum
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from artiphon.core.exceptions import ConfigurationError, InsufficientSpeakersError
from artiphon.core.logging import get_logger
from artiphon.platform.storage_layer import Gender, Manifest, Utterance

logger = get_logger(__name__)


class FoldPolicy(str, enum.Enum):
    DISJOINT = "disjoint"
    PAPER_LITERAL = "paper-literal"


class Split(str, enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class Fold(BaseModel):
    """Speaker ids per role for one fold."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    train: Tuple[str, ...]
    val: Tuple[str, ...]
    test: Tuple[str, ...]
    shares_speakers: bool = False

    def speakers(self, role: Split) -> Tuple[str, ...]:
        return {Split.TRAIN: self.train, Split.VAL: self.val, Split.TEST: self.test}[Split(role)]

    def utterances(self, manifest: Manifest, role: Split) -> List[Utterance]:
        """
        Utterances of ``role`` in manifest order.

        When validation and test share speakers, each held-out speaker's
        utterances are halved: the first half validates, the rest tests.
        """
        role = Split(role)
        selected = manifest.for_speakers(self.speakers(role))
        if not self.shares_speakers or role == Split.TRAIN:
            return selected

        by_speaker: dict = {}
        for u in selected:
            by_speaker.setdefault(u.speaker_id, []).append(u)
        keep = set()
        for items in by_speaker.values():
            half = len(items) // 2
            chosen = items[:half] if role == Split.VAL else items[half:]
            keep.update(u.id for u in chosen)
        return [u for u in selected if u.id in keep]


class FoldPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    folds: List[Fold]
    seed: int
    policy: FoldPolicy

    def __len__(self) -> int:
        return len(self.folds)

    def fold(self, index: int) -> Fold:
        if not 0 <= index < len(self.folds):
            raise ConfigurationError(
                f"Fold {index} does not exist; plan has {len(self.folds)} folds",
                details={"fold": index, "k": len(self.folds)},
            )
        return self.folds[index]


def make_folds(
    speakers: Sequence[Tuple[str, Gender]],
    k: int = 5,
    seed: int = 0,
    policy: FoldPolicy = FoldPolicy.DISJOINT,
) -> FoldPlan:
    """
    Build a k-fold plan over speakers.

    Males and females are shuffled separately with ``seed``; fold f tests
    male f and female f (mod group size) and, under the disjoint policy,
    validates on the next pair in rotation. Groups smaller than k recycle
    test speakers, which is logged as a warning.

    Raises:
        InsufficientSpeakersError: Fewer than two speakers of either gender
        ConfigurationError: k < 1
    """
    policy = FoldPolicy(policy)
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")

    males = sorted(s for s, g in speakers if Gender(g) == Gender.MALE)
    females = sorted(s for s, g in speakers if Gender(g) == Gender.FEMALE)
    if len(males) < 2 or len(females) < 2:
        raise InsufficientSpeakersError(
            "Gender-balanced folds need at least two speakers of each gender",
            details={"male": len(males), "female": len(females)},
        )

    rng = np.random.default_rng(seed)
    males = [males[i] for i in rng.permutation(len(males))]
    females = [females[i] for i in rng.permutation(len(females))]
    if len(males) < k or len(females) < k:
        logger.warning("fold_test_speakers_recycled", k=k, male=len(males), female=len(females))

    everyone = [s for s, _ in speakers]
    folds = []
    for f in range(k):
        test = (males[f % len(males)], females[f % len(females)])
        if policy == FoldPolicy.DISJOINT:
            val = (males[(f + 1) % len(males)], females[(f + 1) % len(females)])
            held = set(test) | set(val)
            folds.append(
                Fold(index=f, train=tuple(s for s in everyone if s not in held), val=val, test=test)
            )
        else:
            folds.append(
                Fold(
                    index=f,
                    train=tuple(s for s in everyone if s not in test),
                    val=test,
                    test=test,
                    shares_speakers=True,
                )
            )

    logger.info("fold_plan_created", k=k, seed=seed, policy=policy.value, speakers=len(everyone))
    return FoldPlan(folds=folds, seed=seed, policy=policy)
