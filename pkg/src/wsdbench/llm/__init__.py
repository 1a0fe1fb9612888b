from .cache import DiskCache, cache_key
from .cost import CostLedger, LedgerRecord, Price, PriceTable, estimate_tokens
from .gateway import Completion, Gateway, ModelRef, RetriesExhausted, load_config
from .providers import (
    AuthError,
    MockProvider,
    OpenAICompatibleProvider,
    PermanentProviderError,
    ProviderError,
    ProviderReply,
    TransientProviderError,
    api_key_env,
    mock_provider,
    prompt_hash,
)
