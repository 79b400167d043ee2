import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from pelab.corpus import LangPair, Segment


def make_segment(
    index: int = 0,
    source: str = "hello world",
    translation: str = "hallo welt",
    lang: str = "en-de",
    system: str = "sysA",
) -> Segment:
    return Segment(
        id=f"{system}:{index}",
        lang=LangPair.parse(lang),
        source=source,
        initial_translation=translation,
        system=system,
    )
