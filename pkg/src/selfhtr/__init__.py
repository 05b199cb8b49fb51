"""Self-training toolkit for word-level handwritten text recognition.

Train a recognizer purely on synthetically rendered word images, then
adapt it to an unlabeled image collection by iterative confidence-
filtered pseudo-labeling with two-view consistency training.
"""

__version__ = "0.1.0"

from .charset import Charset
from .render import Dataset, WordImage

__all__ = ["Charset", "Dataset", "WordImage", "__version__"]
