"""Rating prediction, personalized review extraction and polarity classification
from user reviews."""

__version__ = "0.1.0"
