"""Exception types shared across the pipeline."""


class T2SError(Exception):
    """Base class for pipeline errors."""


class ProviderError(T2SError):
    """A score/embedding provider could not serve a request."""


class ProviderProtocolError(ProviderError):
    """A provider answered, but the answer violates the wire contract
    (misaligned lengths, scores outside [0, 1], malformed payload)."""


class MissingScoreError(ProviderError):
    """A required (tweet, hypothesis) score is not available."""


class MissingEmbeddingError(ProviderError):
    """A required embedding vector is not available."""


class MissingTranslationError(T2SError):
    """A tweet lacks the translated text required by the selected model."""
