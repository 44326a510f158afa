"""Builds the toy model bundle used by the motifscan integration tests.

The bundle follows the layout the engine expects from a real export:
model.json, two ONNX graphs, vocab.json + merges.txt, and
reference_vectors.json with fixture inputs and their expected token ids
and embeddings. Expected values come from an independent stack:
torchvision transforms for preprocessing, a straightforward Python port of
the byte-level BPE tokenizer, and numpy for the graph arithmetic.

Run from this directory: python3 make_bundle.py
"""

import html
import json
import os

import numpy as np
import onnx
import regex as re
import torch
from onnx import TensorProto, helper, numpy_helper
from PIL import Image, ImageDraw
from torchvision import transforms

OUT = "bundle"
RES = 16
DIM = 32
CTX = 77
MEAN = [0.48145466, 0.4578275, 0.40821073]
STD = [0.26862954, 0.26130258, 0.27577711]
NUM_MERGES = 80

TEXTS = [
    "Saint George and the Dragon",
    "swastika stamped on aged coinage",
    "",
    "A double-headed eagle, 1917!",
    "it's the rider's   HORSE",
]

CORPUS = """
saint george and the dragon slaying the dragon on horseback with a lance
the eagle stands on the coin and the rider holds the reins of the horse
stamped coinage with a swastika and aged silver from the old mint
"""


def bytes_to_unicode():
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


PAT = re.compile(
    r"""<\|startoftext\|>|<\|endoftext\|>|'s|'t|'re|'ve|'m|'ll|'d|[\p{L}]+|[\p{N}]|[^\s\p{L}\p{N}]+""",
    re.IGNORECASE,
)


def clean(text):
    text = html.unescape(html.unescape(text)).strip()
    return re.sub(r"\s+", " ", text).strip().lower()


def learn_merges(corpus, n):
    enc = bytes_to_unicode()
    words = {}
    for w in re.findall(PAT, clean(corpus)):
        sym = tuple("".join(enc[b] for b in w.encode("utf-8")))
        sym = sym[:-1] + (sym[-1] + "</w>",)
        words[sym] = words.get(sym, 0) + 1
    merges = []
    for _ in range(n):
        pairs = {}
        for w, c in words.items():
            for a, b in zip(w, w[1:]):
                pairs[(a, b)] = pairs.get((a, b), 0) + c
        if not pairs:
            break
        best = max(sorted(pairs), key=lambda p: pairs[p])
        merges.append(best)
        new = {}
        for w, c in words.items():
            out, i = [], 0
            while i < len(w):
                if i + 1 < len(w) and (w[i], w[i + 1]) == best:
                    out.append(w[i] + w[i + 1])
                    i += 2
                else:
                    out.append(w[i])
                    i += 1
            new[tuple(out)] = new.get(tuple(out), 0) + c
        words = new
    return merges


class Tokenizer:
    def __init__(self, merges):
        self.byte_encoder = bytes_to_unicode()
        vocab = list(self.byte_encoder.values())
        vocab = vocab + [v + "</w>" for v in vocab]
        vocab += ["".join(m) for m in merges]
        vocab += ["<|startoftext|>", "<|endoftext|>"]
        self.encoder = dict(zip(vocab, range(len(vocab))))
        self.ranks = dict(zip(merges, range(len(merges))))

    def bpe(self, token):
        word = tuple(token[:-1]) + (token[-1] + "</w>",)
        while len(word) > 1:
            pairs = set(zip(word, word[1:]))
            bigram = min(pairs, key=lambda p: self.ranks.get(p, float("inf")))
            if bigram not in self.ranks:
                break
            first, second = bigram
            new, i = [], 0
            while i < len(word):
                try:
                    j = word.index(first, i)
                except ValueError:
                    new.extend(word[i:])
                    break
                new.extend(word[i:j])
                i = j
                if word[i] == first and i < len(word) - 1 and word[i + 1] == second:
                    new.append(first + second)
                    i += 2
                else:
                    new.append(word[i])
                    i += 1
            word = tuple(new)
        return word

    def tokenize(self, text):
        sot, eot = self.encoder["<|startoftext|>"], self.encoder["<|endoftext|>"]
        ids = []
        for token in re.findall(PAT, clean(text)):
            token = "".join(self.byte_encoder[b] for b in token.encode("utf-8"))
            ids.extend(self.encoder[t] for t in self.bpe(token))
        seq = [sot] + ids + [eot]
        if len(seq) > CTX:
            seq = seq[:CTX]
            seq[-1] = eot
        return seq + [0] * (CTX - len(seq))


def fixture_images():
    rng = np.random.default_rng(7)
    imgs = {}
    g = np.zeros((28, 40, 3), np.uint8)
    g[..., 0] = np.linspace(0, 255, 40)[None, :]
    g[..., 1] = np.linspace(255, 0, 28)[:, None]
    g[..., 2] = 90
    imgs["gradient"] = Image.fromarray(g)
    yy, xx = np.mgrid[0:20, 0:12]
    c = (((xx // 3) + (yy // 3)) % 2 * 255).astype(np.uint8)
    imgs["checkerboard"] = Image.fromarray(np.stack([c, c, 255 - c // 2], -1))
    rider = Image.new("RGB", (48, 40), (200, 190, 150))
    d = ImageDraw.Draw(rider)
    d.ellipse((10, 16, 36, 28), fill=(60, 40, 30))
    for x in (12, 18, 28, 33):
        d.rectangle((x, 26, x + 2, 37), fill=(60, 40, 30))
    d.polygon([(34, 18), (44, 10), (46, 14), (38, 22)], fill=(60, 40, 30))
    d.rectangle((20, 6, 25, 17), fill=(30, 30, 80))
    d.line((14, 4, 40, 30), fill=(220, 220, 220), width=1)
    imgs["rider"] = rider
    yy, xx = np.mgrid[0:30, 0:30]
    r = np.hypot(xx - 14.5, yy - 14.5)
    ring = ((np.sin(r) * 0.5 + 0.5) * 255).astype(np.uint8)
    imgs["rings"] = Image.fromarray(np.stack([ring, ring // 2, 255 - ring], -1))
    imgs["noise"] = Image.fromarray(rng.integers(0, 256, (21, 33, 3), dtype=np.uint8))
    return imgs


def make_graphs(rng, vocab_size):
    w_img = rng.standard_normal((3 * RES * RES, DIM)).astype(np.float32) / 10
    b_img = rng.standard_normal(DIM).astype(np.float32) / 10
    emb = rng.standard_normal((vocab_size, DIM)).astype(np.float32)

    img_graph = helper.make_graph(
        [
            helper.make_node("Flatten", ["pixel_values"], ["flat"], axis=1),
            helper.make_node("MatMul", ["flat", "w"], ["proj"]),
            helper.make_node("Add", ["proj", "b"], ["image_embeds"]),
        ],
        "image_encoder",
        [helper.make_tensor_value_info("pixel_values", TensorProto.FLOAT, ["batch", 3, RES, RES])],
        [helper.make_tensor_value_info("image_embeds", TensorProto.FLOAT, ["batch", DIM])],
        [numpy_helper.from_array(w_img, "w"), numpy_helper.from_array(b_img, "b")],
    )
    txt_graph = helper.make_graph(
        [
            helper.make_node("Gather", ["table", "input_ids"], ["rows"], axis=0),
            helper.make_node("ReduceSum", ["rows", "axes"], ["text_embeds"], keepdims=0),
        ],
        "text_encoder",
        [helper.make_tensor_value_info("input_ids", TensorProto.INT64, ["batch", CTX])],
        [helper.make_tensor_value_info("text_embeds", TensorProto.FLOAT, ["batch", DIM])],
        [numpy_helper.from_array(emb, "table"), numpy_helper.from_array(np.array([1], np.int64), "axes")],
    )
    opset = [helper.make_opsetid("", 13)]
    for graph, name in ((img_graph, "image_encoder.onnx"), (txt_graph, "text_encoder.onnx")):
        model = helper.make_model(graph, opset_imports=opset, producer_name="make_bundle")
        model.ir_version = 8
        onnx.checker.check_model(model)
        onnx.save(model, os.path.join(OUT, name))
    return w_img, b_img, emb


def unit(v):
    v = np.asarray(v, np.float64)
    return (v / np.linalg.norm(v)).tolist()


def main():
    os.makedirs(os.path.join(OUT, "fixtures"), exist_ok=True)
    merges = learn_merges(CORPUS, NUM_MERGES)
    tok = Tokenizer(merges)
    with open(os.path.join(OUT, "merges.txt"), "w", encoding="utf-8") as f:
        f.write("#version: 0.2\n")
        for a, b in merges:
            f.write(f"{a} {b}\n")
    with open(os.path.join(OUT, "vocab.json"), "w", encoding="utf-8") as f:
        json.dump(tok.encoder, f, ensure_ascii=False, indent=0)

    rng = np.random.default_rng(1234)
    w_img, b_img, emb = make_graphs(rng, len(tok.encoder))

    pre = transforms.Compose(
        [
            transforms.Resize(RES, interpolation=transforms.InterpolationMode.BICUBIC),
            transforms.CenterCrop(RES),
            transforms.ToTensor(),
            transforms.Normalize(MEAN, STD),
        ]
    )
    images = []
    for name, img in fixture_images().items():
        rel = f"fixtures/{name}.png"
        img.save(os.path.join(OUT, rel))
        pixels = pre(Image.open(os.path.join(OUT, rel)).convert("RGB")).numpy().astype(np.float32)
        raw = pixels.reshape(1, -1).astype(np.float64) @ w_img.astype(np.float64) + b_img
        images.append(
            {"name": name, "file": rel, "pixel_values": pixels.reshape(-1).tolist(), "embedding": unit(raw[0])}
        )
    texts = []
    for text in TEXTS:
        ids = tok.tokenize(text)
        raw = emb.astype(np.float64)[ids].sum(0)
        texts.append({"text": text, "tokens": ids, "embedding": unit(raw)})

    model = {
        "model_id": "toy-clip",
        "checkpoint": "synthetic:make_bundle.py",
        "embed_dim": DIM,
        "image_encoder": "image_encoder.onnx",
        "text_encoder": "text_encoder.onnx",
        "preprocess": {
            "resolution": RES,
            "mean": MEAN,
            "std": STD,
            "resize_mode": "shortest_center_crop",
            "interpolation": "bicubic",
        },
        "tokenizer": {
            "vocab": "vocab.json",
            "merges": "merges.txt",
            "context_length": CTX,
            "sot_id": tok.encoder["<|startoftext|>"],
            "eot_id": tok.encoder["<|endoftext|>"],
        },
    }
    with open(os.path.join(OUT, "model.json"), "w") as f:
        json.dump(model, f, indent=2)
    with open(os.path.join(OUT, "reference_vectors.json"), "w") as f:
        json.dump({"model_id": "toy-clip", "images": images, "texts": texts}, f)


if __name__ == "__main__":
    torch.manual_seed(0)
    main()
