"""Extension point for plugging a real fine-tuning trainer into the adapter.

The stub in serve.py answers every request from a lookup table; a real
deployment replaces that lookup with actual training while keeping the
serving loop, request schema and reply framing exactly the same. An
implementation of serve_finetune has to:

 1. load the model and tokenizer named by ``AdapterConfig.model`` onto
    ``AdapterConfig.device`` once, before reading requests;
 2. for each request, read the train/valid/test JSONL files it names;
 3. fine-tune for ``epochs`` epochs at learning rate ``lr`` and batch size
    ``batch_size``, seeding every RNG from ``seed`` and truncating inputs to
    ``max_tokens`` subword tokens;
 4. after each epoch, emit one line
    ``{"epoch": e, "f1_test": ..., "valid_loss": ...}`` with the macro-F1
    on the test split and the loss on the validation split;
 5. emit ``{"done": true}`` after the final epoch, or ``{"error": reason}``
    as the terminal line if training cannot proceed.

Keeping one request per process at a time is part of the contract; the
driving engine achieves parallelism by spawning several adapter processes.
"""

from .config import AdapterConfig


def serve_finetune(config: AdapterConfig, source=None, sink=None) -> int:
    raise NotImplementedError(
        "fine-tune mode is an extension point, not shipped: implement "
        "serve_finetune following the steps in trainer_adapter/finetune.py")
