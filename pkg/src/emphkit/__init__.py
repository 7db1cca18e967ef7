"""Word-emphasis control for duration-driven speech synthesis.

Implements duration-dilation emphasis alongside a mel-modification baseline
and flag-conditioned correlate injection, plus the acoustic analysis and
listening-test statistics used to compare them.
"""

from .phonology import (
    Phoneme,
    Utterance,
    UtteranceFormatError,
    Word,
    parse_utterance,
    serialize_utterance,
    upsample_flags,
)
from .duration import (
    DurationModel,
    DurationSequence,
    dilate,
    fit_duration_model,
    predict_durations,
)
from .acoustics import (
    MelSpectrogram,
    ProsodyPlan,
    apply_mel_emph_gain,
    frames_for_word,
    plan_prosody,
    read_mel,
    render_mel,
    write_mel,
)
from .vocoder import FrameHops, Waveform, make_hops, mel_emph, vocode
from .analysis import (
    F0Track,
    IntensityTrack,
    WordAcousticReport,
    WordAlignment,
    detect_silences,
    estimate_f0,
    identify_emphasis,
    intensity,
    word_report,
)
from .evalstats import (
    IdentifiabilityRecord,
    PreferenceTally,
    RatingsMatrix,
    friedman,
    identifiability,
    mushra_summary,
    preference_delta,
)
from .pipeline import RunConfig, SynthesisResult, synthesize

__version__ = "0.1.0"
