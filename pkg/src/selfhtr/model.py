"""Word recognizer: CNN feature extractor, bidirectional GRU encoder, and
an attention decoder with label-smoothed cross-entropy training.

Two backbones share a horizontal stride of 8: ``compact`` (5 conv blocks,
desk-scale) and ``full`` (a VGG-19-BN style stack). The decoder uses
local content attention: scores are masked to a window around the
previous step's attention centroid, softmaxed, smoothed with a small
normalized kernel, and renormalized.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import pickle
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .charset import EOS_ID, PAD_ID, SOS_ID, Charset
from .errors import CheckpointError, ModelError, NonFiniteLossError
from .render import WordImage

HORIZONTAL_STRIDE = 8

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class RecognizerConfig:
    charset_chars: str
    backbone: str = "compact"
    compact_channels: tuple[int, ...] = (32, 64, 96, 128, 128)
    enc_hidden: int = 128
    enc_layers: int = 2
    dec_hidden: int = 256
    embed_dim: int = 64
    attn_dim: int = 128
    attn_window: int = 8  # half-width of the local attention window
    max_decode_len: int = 32
    label_smoothing: float = 0.4
    learning_rate: float = 2e-4
    batch_size: int = 32
    height: int = 64
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ModelError("label_smoothing must be in [0,1)")
        if self.max_decode_len < 1:
            raise ModelError("max_decode_len must be >= 1")
        if min(self.enc_hidden, self.dec_hidden, self.embed_dim, self.attn_dim) < 1:
            raise ModelError("hidden sizes must be >= 1")
        if self.backbone not in ("compact", "full"):
            raise ModelError(f"unknown backbone {self.backbone!r}")
        if self.dtype not in ("float32", "float64"):
            raise ModelError(f"unsupported dtype {self.dtype!r}")

    @property
    def charset(self) -> Charset:
        return Charset.from_string(self.charset_chars)

    @property
    def torch_dtype(self):
        return torch.float64 if self.dtype == "float64" else torch.float32

    def to_dict(self) -> dict:
        d = asdict(self)
        d["compact_channels"] = list(self.compact_channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RecognizerConfig":
        d = dict(d)
        d["compact_channels"] = tuple(d["compact_channels"])
        return cls(**d)

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


@dataclass
class EncoderOutput:
    """Sequence of contextual feature vectors for one image."""

    features: np.ndarray  # (N, D)

    @property
    def n(self) -> int:
        return self.features.shape[0]


@dataclass
class Prediction:
    """Greedy decode output: emitted ids with per-step distributions.

    ``char_ids`` are charset ids and include the end-of-sequence id when
    it was emitted; ``step_dists[t]`` is the distribution over emittable
    classes (end-of-sequence + printables) at step t; ``attention[t]``
    holds the attention masses over the valid encoder positions.
    """

    char_ids: list[int]
    step_dists: np.ndarray  # (T, K)
    attention: np.ndarray  # (T, N)
    charset: Charset = field(repr=False, default=None)

    @property
    def num_steps(self) -> int:
        return len(self.char_ids)

    @property
    def text(self) -> str:
        return self.charset.ids_to_text(self.char_ids)


def _vgg19_bn_layers(height: int):
    cfg = [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M",
           512, 512, 512, 512, "M21", 512, 512, 512, 512, "M21"]
    layers: list[nn.Module] = []
    in_ch = 1
    h = height
    for v in cfg:
        if v == "M":
            layers.append(nn.MaxPool2d((2, 2)))
            h //= 2
        elif v == "M21":
            layers.append(nn.MaxPool2d((2, 1)))
            h //= 2
        else:
            layers += [nn.Conv2d(in_ch, v, 3, padding=1), nn.BatchNorm2d(v),
                       nn.ReLU(inplace=True)]
            in_ch = v
    return nn.Sequential(*layers), in_ch * max(1, h)


def _compact_layers(channels, height: int):
    pools = [(2, 2), (2, 2), (2, 2), (2, 1), (2, 1)]
    if len(channels) != len(pools):
        raise ModelError("compact backbone needs exactly 5 channel sizes")
    layers: list[nn.Module] = []
    in_ch = 1
    h = height
    for ch, pool in zip(channels, pools):
        layers += [nn.Conv2d(in_ch, ch, 3, padding=1), nn.BatchNorm2d(ch),
                   nn.ReLU(inplace=True), nn.MaxPool2d(pool)]
        in_ch = ch
        h //= 2
    return nn.Sequential(*layers), in_ch * max(1, h)


class RecognizerNet(nn.Module):
    def __init__(self, cfg: RecognizerConfig):
        super().__init__()
        self.cfg = cfg
        charset = cfg.charset
        self.num_classes = charset.num_classes

        if cfg.backbone == "compact":
            self.cnn, feat_dim = _compact_layers(cfg.compact_channels, cfg.height)
        else:
            self.cnn, feat_dim = _vgg19_bn_layers(cfg.height)

        self.encoder = nn.GRU(feat_dim, cfg.enc_hidden, num_layers=cfg.enc_layers,
                              bidirectional=True, batch_first=True)
        enc_dim = 2 * cfg.enc_hidden
        self.embed = nn.Embedding(charset.num_ids, cfg.embed_dim)
        self.dec_cell = nn.GRUCell(cfg.embed_dim + enc_dim, cfg.dec_hidden)
        self.dec_init = nn.Linear(enc_dim, cfg.dec_hidden)
        self.attn_enc = nn.Linear(enc_dim, cfg.attn_dim, bias=False)
        self.attn_dec = nn.Linear(cfg.dec_hidden, cfg.attn_dim)
        self.attn_v = nn.Linear(cfg.attn_dim, 1, bias=False)
        self.out = nn.Linear(cfg.dec_hidden + enc_dim + cfg.embed_dim,
                             self.num_classes)
        self.register_buffer(
            "smooth_kernel", torch.tensor([[[0.25, 0.5, 0.25]]]), persistent=False
        )

    # ---- encoder ----

    def extract_features(self, images: torch.Tensor) -> torch.Tensor:
        """(B,1,H,W) -> (B,N,D) column feature sequence."""
        fmap = self.cnn(images)  # (B,C,h,N)
        b, c, h, n = fmap.shape
        return fmap.permute(0, 3, 1, 2).reshape(b, n, c * h)

    def encode_batch(self, images: torch.Tensor, valid_n: torch.Tensor) -> torch.Tensor:
        feats = self.extract_features(images)
        packed = nn.utils.rnn.pack_padded_sequence(
            feats, valid_n.cpu(), batch_first=True, enforce_sorted=False)
        out, _ = self.encoder(packed)
        enc, _ = nn.utils.rnn.pad_packed_sequence(
            out, batch_first=True, total_length=feats.shape[1])
        return enc  # (B,N,2*enc_hidden)

    # ---- attention ----

    def _attend(self, enc, enc_proj, state, center, valid_mask, pos):
        scores = self.attn_v(torch.tanh(enc_proj + self.attn_dec(state).unsqueeze(1)))
        scores = scores.squeeze(-1)  # (B,N)
        window = (pos.unsqueeze(0) - center.unsqueeze(1)).abs() <= self.cfg.attn_window
        mask = window & valid_mask
        scores = scores.masked_fill(~mask, float("-inf"))
        alpha = F.softmax(scores, dim=1)
        kernel = self.smooth_kernel.to(alpha.dtype)
        alpha = F.conv1d(alpha.unsqueeze(1), kernel, padding=1).squeeze(1)
        alpha = alpha * valid_mask.to(alpha.dtype)
        alpha = alpha / alpha.sum(dim=1, keepdim=True)
        context = torch.bmm(alpha.unsqueeze(1), enc).squeeze(1)
        new_center = (alpha * pos.to(alpha.dtype)).sum(dim=1)
        return context, alpha, new_center

    def _init_state(self, enc, valid_mask):
        m = valid_mask.to(enc.dtype).unsqueeze(-1)
        mean = (enc * m).sum(dim=1) / m.sum(dim=1)
        return torch.tanh(self.dec_init(mean))

    # ---- decoding ----

    def step(self, enc, enc_proj, state, center, prev_ids, valid_mask, pos):
        context, alpha, new_center = self._attend(
            enc, enc_proj, state, center, valid_mask, pos)
        emb = self.embed(prev_ids)
        new_state = self.dec_cell(torch.cat([emb, context], dim=1), state)
        logits = self.out(torch.cat([new_state, context, emb], dim=1))
        return logits, new_state, new_center, alpha


def collate_images(images: list[WordImage], height: int, dtype) -> tuple:
    """Pad to a common width (multiple of the stride) with per-image
    background fill; returns (tensor (B,1,H,W), valid column counts)."""
    if not images:
        raise ModelError("empty batch")
    widths = []
    for im in images:
        if im.height != height:
            raise ModelError(f"expected image height {height}, got {im.height}")
        if im.width < HORIZONTAL_STRIDE:
            raise ModelError(
                f"image width {im.width} below backbone minimum {HORIZONTAL_STRIDE}")
        widths.append(im.width)
    w_max = max(widths)
    w_max = ((w_max + HORIZONTAL_STRIDE - 1) // HORIZONTAL_STRIDE) * HORIZONTAL_STRIDE
    batch = torch.empty((len(images), 1, height, w_max), dtype=dtype)
    valid_n = []
    for i, im in enumerate(images):
        fill = im.background_estimate()
        batch[i].fill_(fill)
        batch[i, 0, :, : im.width] = torch.as_tensor(im.pixels, dtype=dtype)
        valid_n.append(im.width // HORIZONTAL_STRIDE if im.width % HORIZONTAL_STRIDE == 0
                       else im.width // HORIZONTAL_STRIDE + 1)
    return batch, torch.tensor(valid_n, dtype=torch.long)


def smoothed_target_entropy(num_classes: int, eps: float) -> float:
    """Entropy of the label-smoothed target distribution (the loss floor)."""
    if eps == 0.0:
        return 0.0
    k = num_classes
    return -( (1 - eps) * math.log(1 - eps) + eps * math.log(eps / (k - 1)) )


class Recognizer:
    """Owns the network, optimizer, and training-cycle counter."""

    def __init__(self, config: RecognizerConfig):
        self.config = config
        self.charset = config.charset
        torch.manual_seed(config.seed)
        self.net = RecognizerNet(config).to(config.torch_dtype)
        self.optimizer = torch.optim.Adam(
            self.net.parameters(), lr=config.learning_rate)
        self.cycle = 0

    # ---- public operations ----

    def encode(self, image: WordImage) -> EncoderOutput:
        self.net.eval()
        with torch.no_grad():
            batch, valid_n = collate_images([image], self.config.height,
                                            self.config.torch_dtype)
            enc = self.net.encode_batch(batch, valid_n)
        n = int(valid_n[0])
        return EncoderOutput(features=enc[0, :n].numpy())

    def decode_greedy(self, image: WordImage) -> Prediction:
        return self.predict([image])[0]

    def predict(self, images: list[WordImage], batch_size: int | None = None
                ) -> list[Prediction]:
        """Greedy decode on unaugmented inputs, batched by width for speed.

        Output order matches the input order; results are deterministic
        for a fixed model state.
        """
        bs = batch_size or self.config.batch_size
        order = sorted(range(len(images)), key=lambda i: (images[i].width, i))
        results: list[Prediction | None] = [None] * len(images)
        self.net.eval()
        with torch.no_grad():
            for start in range(0, len(order), bs):
                chunk = order[start:start + bs]
                for idx, pred in zip(chunk, self._decode_batch([images[i] for i in chunk])):
                    results[idx] = pred
        return results  # type: ignore[return-value]

    def _decode_batch(self, images: list[WordImage]) -> list[Prediction]:
        cfg = self.config
        batch, valid_n = collate_images(images, cfg.height, cfg.torch_dtype)
        net = self.net
        enc = net.encode_batch(batch, valid_n)
        b, n_max, _ = enc.shape
        pos = torch.arange(n_max)
        valid_mask = pos.unsqueeze(0) < valid_n.unsqueeze(1)
        enc_proj = net.attn_enc(enc)
        state = net._init_state(enc, valid_mask)
        center = torch.zeros(b, dtype=cfg.torch_dtype)
        prev = torch.full((b,), SOS_ID, dtype=torch.long)
        done = torch.zeros(b, dtype=torch.bool)

        dists = [[] for _ in range(b)]
        atts = [[] for _ in range(b)]
        ids = [[] for _ in range(b)]
        for _ in range(cfg.max_decode_len):
            logits, state, center, alpha = net.step(
                enc, enc_proj, state, center, prev, valid_mask, pos)
            center = torch.clamp(center, torch.zeros(()),
                                 (valid_n - 1).to(center.dtype))
            probs = F.softmax(logits, dim=1)
            top = probs.argmax(dim=1)
            for i in range(b):
                if done[i]:
                    continue
                dists[i].append(probs[i].numpy().copy())
                atts[i].append(alpha[i, : int(valid_n[i])].numpy().copy())
                cid = self.charset.class_to_id(int(top[i]))
                ids[i].append(cid)
                if cid == EOS_ID:
                    done[i] = True
            prev = torch.where(done, torch.full_like(top, EOS_ID),
                               top + 2)  # class index -> charset id
            if bool(done.all()):
                break
        return [
            Prediction(char_ids=ids[i], step_dists=np.stack(dists[i]),
                       attention=np.stack(atts[i]), charset=self.charset)
            for i in range(b)
        ]

    # ---- losses ----

    def per_sample_losses(self, samples: list[tuple[WordImage, str]],
                          eps: float | None = None) -> torch.Tensor:
        """Teacher-forced label-smoothed cross-entropy, one mean-per-step
        loss per sample. Differentiable."""
        if not samples:
            raise ModelError("empty batch")
        cfg = self.config
        eps = cfg.label_smoothing if eps is None else eps
        charset = self.charset
        k = charset.num_classes

        targets = []
        for im, text in samples:
            ids = charset.text_to_ids(text)
            if len(ids) + 1 > cfg.max_decode_len:
                raise ModelError(
                    f"target {text!r} needs {len(ids)+1} steps, cap is {cfg.max_decode_len}")
            targets.append(ids)

        images = [im for im, _ in samples]
        batch, valid_n = collate_images(images, cfg.height, cfg.torch_dtype)
        net = self.net
        enc = net.encode_batch(batch, valid_n)
        b, n_max, _ = enc.shape
        pos = torch.arange(n_max)
        valid_mask = pos.unsqueeze(0) < valid_n.unsqueeze(1)
        enc_proj = net.attn_enc(enc)
        state = net._init_state(enc, valid_mask)
        center = torch.zeros(b, dtype=cfg.torch_dtype)

        t_steps = max(len(t) for t in targets) + 1
        dec_in = torch.full((b, t_steps), PAD_ID, dtype=torch.long)
        dec_out = torch.full((b, t_steps), 0, dtype=torch.long)
        step_mask = torch.zeros((b, t_steps), dtype=cfg.torch_dtype)
        for i, ids in enumerate(targets):
            dec_in[i, 0] = SOS_ID
            for t, cid in enumerate(ids):
                dec_in[i, t + 1] = cid
                dec_out[i, t] = charset.id_to_class(cid)
            dec_out[i, len(ids)] = charset.id_to_class(EOS_ID)
            step_mask[i, : len(ids) + 1] = 1.0

        total = torch.zeros(b, dtype=cfg.torch_dtype)
        for t in range(t_steps):
            logits, state, center, _ = net.step(
                enc, enc_proj, state, center, dec_in[:, t], valid_mask, pos)
            center = torch.clamp(center, torch.zeros(()),
                                 (valid_n - 1).to(center.dtype))
            logp = F.log_softmax(logits, dim=1)
            true_lp = logp.gather(1, dec_out[:, t:t + 1]).squeeze(1)
            if eps > 0:
                ce = -((1 - eps) * true_lp
                       + eps / (k - 1) * (logp.sum(dim=1) - true_lp))
            else:
                ce = -true_lp
            total = total + ce * step_mask[:, t]
        return total / step_mask.sum(dim=1)

    def recognition_loss(self, image: WordImage, target: str,
                         eps: float | None = None) -> torch.Tensor:
        """Scalar loss for one (image, target) pair under teacher forcing."""
        return self.per_sample_losses([(image, target)], eps=eps)[0]

    def train_step(self, samples: list[tuple[WordImage, str]]) -> float:
        """One optimizer step on the mean batch loss; returns the loss."""
        self.net.train()
        losses = self.per_sample_losses(samples)
        loss = losses.mean()
        if not torch.isfinite(loss):
            raise NonFiniteLossError(
                "non-finite training loss",
                diagnostics={"losses": [float(x) for x in losses.detach()],
                             "batch_size": len(samples)},
            )
        self.optimizer.zero_grad()
        loss.backward()
        self.optimizer.step()
        return float(loss.detach())

    # ---- checkpointing ----

    def save(self, path: str) -> None:
        save_checkpoint(self, path)

    @classmethod
    def load(cls, path: str) -> "Recognizer":
        return load_checkpoint(path)


def _state_to_numpy(sd: dict) -> dict:
    out = {}
    for key, val in sd.items():
        if isinstance(val, torch.Tensor):
            out[key] = val.detach().cpu().numpy()
        elif isinstance(val, dict):
            out[key] = _state_to_numpy(val)
        elif isinstance(val, (list, tuple)):
            out[key] = type(val)(
                _state_to_numpy(v) if isinstance(v, dict)
                else v.detach().cpu().numpy() if isinstance(v, torch.Tensor) else v
                for v in val
            )
        else:
            out[key] = val
    return out


def _state_to_torch(sd, dtype):
    if isinstance(sd, dict):
        return {k: _state_to_torch(v, dtype) for k, v in sd.items()}
    if isinstance(sd, (list, tuple)):
        return type(sd)(_state_to_torch(v, dtype) for v in sd)
    if isinstance(sd, np.ndarray):
        t = torch.from_numpy(sd.copy())
        if t.is_floating_point():
            t = t.to(dtype)
        return t
    return sd


def save_checkpoint(rec: Recognizer, path: str) -> None:
    """Versioned binary checkpoint with a JSON sidecar.

    The binary payload is deterministic for identical state; volatile
    metadata (timestamps) lives only in the sidecar.
    """
    import time

    payload = {
        "format_version": CHECKPOINT_VERSION,
        "config": rec.config.to_dict(),
        "cycle": rec.cycle,
        "model": _state_to_numpy(dict(rec.net.state_dict())),
        "optimizer": _state_to_numpy(rec.optimizer.state_dict()),
        "torch_rng": torch.get_rng_state().numpy(),
    }
    blob = pickle.dumps(payload, protocol=4)
    with open(path, "wb") as fh:
        fh.write(blob)
    sidecar = {
        "format_version": CHECKPOINT_VERSION,
        "config_hash": rec.config.hash(),
        "cycle": rec.cycle,
        "charset": rec.config.charset_chars,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str) -> Recognizer:
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint {path!r} does not exist")
    except Exception as e:
        raise CheckpointError(f"checkpoint {path!r} is corrupt: {e}") from e
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"checkpoint {path!r} has no version header")
    if payload["format_version"] != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint {path!r} has version {payload['format_version']},"
            f" expected {CHECKPOINT_VERSION}")
    cfg = RecognizerConfig.from_dict(payload["config"])
    rec = Recognizer(cfg)
    model_sd = _state_to_torch(payload["model"], cfg.torch_dtype)
    rec.net.load_state_dict(model_sd)
    rec.optimizer.load_state_dict(_state_to_torch(payload["optimizer"], cfg.torch_dtype))
    rec.cycle = int(payload["cycle"])
    torch.set_rng_state(torch.from_numpy(payload["torch_rng"].copy()))
    return rec
