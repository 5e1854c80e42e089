"""Model inference behind the protocol: masked-token scores over
single-wordpiece candidates, sentence-pair humor probability, and
word-level embeddings pooled from wordpiece vectors.
"""
from __future__ import annotations

import re
from pathlib import Path

import torch
from transformers import AutoTokenizer, BertForMaskedLM, BertForSequenceClassification

MASK = "[MASK]"
_WORD_RE = re.compile(r"[a-zA-Z]+(?:-[a-zA-Z]+)*")


class ServiceError(Exception):
    """Maps directly onto a protocol error status."""

    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.message = message


class LocaleBackend:
    """All capabilities for one locale's mounted checkpoints.

    Inference runs in eval mode with gradients off; with fixed weights a
    fixed request always yields the same bytes.
    """

    def __init__(self, mlm_dir: str | Path, humor_dir: str | Path | None = None) -> None:
        torch.set_num_threads(1)  # keeps reductions bit-stable across runs
        self.tokenizer = AutoTokenizer.from_pretrained(str(mlm_dir))
        self.mlm = BertForMaskedLM.from_pretrained(str(mlm_dir)).eval()
        self.humor_model = None
        if humor_dir is not None:
            self.humor_model = BertForSequenceClassification.from_pretrained(str(humor_dir)).eval()
            self._funny_index = self.humor_model.config.label2id.get("funny", 1)
        vocab = self.tokenizer.get_vocab()
        special = set(self.tokenizer.all_special_ids)
        self._candidate_ids = [
            idx
            for token, idx in sorted(vocab.items())
            if idx not in special and _WORD_RE.fullmatch(token)
        ]
        self._max_positions = self.mlm.config.max_position_embeddings

    # -- masked-token scores --------------------------------------------

    def mask_scores(self, text: str, mask_index: int, top_k: int) -> list[dict]:
        enc = self.tokenizer(text, return_tensors="pt")
        ids = enc["input_ids"][0]
        if len(ids) > self._max_positions:
            raise ServiceError(413, f"text longer than {self._max_positions} wordpieces")
        mask_positions = (ids == self.tokenizer.mask_token_id).nonzero(as_tuple=True)[0]
        if mask_index < 0 or mask_index >= len(mask_positions):
            raise ServiceError(
                422, f"no mask at index {mask_index} ({len(mask_positions)} masks present)"
            )
        with torch.no_grad():
            logits = self.mlm(**enc).logits[0, mask_positions[mask_index]]
            log_probs = torch.log_softmax(logits.double(), dim=-1)
        scored = [
            (self.tokenizer.convert_ids_to_tokens(idx), log_probs[idx].item())
            for idx in self._candidate_ids
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return [{"word": w, "log_prob": lp} for w, lp in scored[:top_k]]

    # -- sentence-pair humor ---------------------------------------------

    def humor(self, masked_text: str, filled_text: str) -> float:
        masked_tokens = masked_text.split()
        filled_tokens = filled_text.split()
        if MASK not in masked_text:
            raise ServiceError(400, "masked_text contains no mask marker")
        if len(masked_tokens) != len(filled_tokens):
            raise ServiceError(400, "masked and filled texts are misaligned")
        for m, f in zip(masked_tokens, filled_tokens):
            if m != f and MASK not in m:
                raise ServiceError(400, "texts differ outside mask positions")
        if self.humor_model is None:
            raise ServiceError(503, "no humor classifier loaded for this locale")
        enc = self.tokenizer(masked_text, filled_text, return_tensors="pt")
        if len(enc["input_ids"][0]) > self._max_positions:
            raise ServiceError(413, f"pair longer than {self._max_positions} wordpieces")
        with torch.no_grad():
            logits = self.humor_model(**enc).logits[0]
            probs = torch.softmax(logits.double(), dim=-1)
        return probs[self._funny_index].item()

    # -- word embeddings ---------------------------------------------------

    def embed(self, text: str, layer: str, max_words: int) -> tuple[list[str], list[list[float]]]:
        words = text.split()
        if not words:
            raise ServiceError(400, "text has no words")
        if len(words) > max_words:
            raise ServiceError(413, f"more than {max_words} words")
        enc = self.tokenizer(words, is_split_into_words=True, return_tensors="pt")
        if len(enc["input_ids"][0]) > self._max_positions:
            raise ServiceError(413, f"text longer than {self._max_positions} wordpieces")
        with torch.no_grad():
            hidden = self.mlm(**enc, output_hidden_states=True).hidden_states
        if layer == "second_to_last":
            states = hidden[-2][0].double()
        else:
            states = sum(h[0].double() for h in hidden[-4:])
        word_ids = enc.word_ids()
        vectors = []
        for w in range(len(words)):
            positions = [i for i, wid in enumerate(word_ids) if wid == w]
            pooled = states[positions].mean(dim=0)
            vectors.append([v.item() for v in pooled])
        return words, vectors
