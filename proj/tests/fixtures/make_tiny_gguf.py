#!/usr/bin/env python3
"""Generates the tiny GGUF test model and its frozen reference outputs.

Writes tiny.gguf (a 2-block llama-style decoder with a SentencePiece-style
vocabulary and mixed tensor encodings) and tiny_reference.json (tokenizer
cases, chat-template cases, final-position logits, per-site residual states,
and a greedy continuation), all computed by an independent numpy
implementation. Deterministic: rerunning reproduces both files byte-for-byte.

Usage: python3 make_tiny_gguf.py [out_dir]
"""

import json
import struct
import sys
from pathlib import Path

import numpy as np

SPACE = "▁"  # SentencePiece space marker

# --------------------------------------------------------------------------
# Vocabulary
# --------------------------------------------------------------------------

NORMAL_SINGLE = list("abcdefghijklmnopqrstuvwxyz") + list(".,?!:;'\"-") + [SPACE]
NORMAL_MULTI = [
    SPACE + "the", SPACE + "of", SPACE + "and", SPACE + "to", SPACE + "is",
    SPACE + "in", SPACE + "a", SPACE + "for", SPACE + "who", SPACE + "which",
    SPACE + "group", SPACE + "people", SPACE + "most", SPACE + "answer",
    "th", "he", "in", "er", "an", "re", "on", "at", "en", "nd", "ti", "es",
    "or", "te", "st", "ar", "ing", "ly", "ould", "ver", "all", "ith",
]


def build_vocab():
    pieces = []  # (text, score, type)
    pieces.append(("<unk>", 0.0, 2))
    pieces.append(("<s>", 0.0, 3))
    pieces.append(("</s>", 0.0, 3))
    for t in ("<|user|>", "<|assistant|>", "<|im_start|>", "<|im_end|>"):
        pieces.append((t, 0.0, 4))
    for b in range(256):
        pieces.append(("<0x%02X>" % b, 0.0, 6))
    for i, t in enumerate(NORMAL_SINGLE):
        pieces.append((t, -20.0 - 0.1 * i, 1))
    for i, t in enumerate(NORMAL_MULTI):
        pieces.append((t, -1.0 - 0.1 * i, 1))
    # Duplicate multi-piece "in" (also a single-combo): keep both spellings
    # distinct -- drop exact text duplicates, keeping the first occurrence.
    seen, out = set(), []
    for text, score, typ in pieces:
        if text in seen:
            continue
        seen.add(text)
        out.append((text, score, typ))
    return out


class Tokenizer:
    """Independent mirror of the SentencePiece merge procedure."""

    def __init__(self, pieces, add_space_prefix=True):
        self.pieces = pieces
        self.add_space_prefix = add_space_prefix
        self.normal = {}
        self.specials = []
        self.bytes = {}
        for tid, (text, score, typ) in enumerate(pieces):
            if typ == 1:
                self.normal[text] = (float(np.float32(score)), tid)
            elif typ in (3, 4):
                self.specials.append((text, tid))
            elif typ == 6:
                self.bytes[int(text[3:5], 16)] = tid
        self.specials.sort(key=lambda p: (-len(p[0]), p[0]))
        self.bos, self.eos, self.unk = 1, 2, 0

    def _encode_fragment(self, text):
        if not text:
            return []
        # Split into unicode characters (as utf-8 byte spans).
        raw = text.encode("utf-8")
        syms = []  # [begin, length, prev, next]
        i = 0
        while i < len(raw):
            b = raw[i]
            n = 1
            if b & 0xE0 == 0xC0:
                n = 2
            elif b & 0xF0 == 0xE0:
                n = 3
            elif b & 0xF8 == 0xF0:
                n = 4
            n = min(n, len(raw) - i)
            k = len(syms)
            syms.append([i, n, k - 1, k + 1 if i + n < len(raw) else -1])
            i += n

        import heapq

        heap = []

        def propose(left, right):
            if left < 0 or right < 0:
                return
            merged = raw[syms[left][0]: syms[left][0] + syms[left][1] +
                         syms[right][1]].decode("utf-8", "ignore")
            hit = self.normal.get(merged)
            if hit is None:
                return
            heapq.heappush(heap, (-hit[0], left, right,
                                  syms[left][1] + syms[right][1]))

        for k in range(len(syms) - 1):
            propose(k, k + 1)
        while heap:
            _, left, right, ln = heapq.heappop(heap)
            if syms[left][1] == 0 or syms[right][1] == 0:
                continue
            if syms[left][1] + syms[right][1] != ln:
                continue
            syms[left][1] += syms[right][1]
            syms[right][1] = 0
            syms[left][3] = syms[right][3]
            if syms[right][3] >= 0:
                syms[syms[right][3]][2] = left
            propose(syms[left][2], left)
            propose(left, syms[left][3])

        ids = []
        idx = 0
        while idx >= 0:
            begin, ln, _, nxt = syms[idx]
            surface = raw[begin: begin + ln].decode("utf-8", "ignore")
            hit = self.normal.get(surface)
            if hit is not None:
                ids.append(hit[1])
            else:
                for b in raw[begin: begin + ln]:
                    ids.append(self.bytes.get(b, self.unk))
            idx = nxt
        return ids

    def encode(self, text):
        parts = []
        start = i = 0
        while i < len(text):
            hit = None
            for stext, sid in self.specials:
                if text.startswith(stext, i):
                    hit = (stext, sid)
                    break
            if hit:
                if i > start:
                    parts.append((text[start:i], -1))
                parts.append(("", hit[1]))
                i += len(hit[0])
                start = i
            else:
                i += 1
        if start < len(text):
            parts.append((text[start:], -1))
        ids = []
        first = True
        for fragment, special in parts:
            if special >= 0:
                ids.append(special)
                first = False
                continue
            prepared = (SPACE if first and self.add_space_prefix else "")
            prepared += fragment.replace(" ", SPACE)
            ids.extend(self._encode_fragment(prepared))
            first = False
        return ids

    def decode(self, ids):
        out = bytearray()
        for tid in ids:
            text, _, typ = self.pieces[tid]
            if typ == 3:
                continue
            if typ == 6:
                out.append(int(text[3:5], 16))
            else:
                out += text.replace(SPACE, " ").encode("utf-8")
        s = out.decode("utf-8", "replace")
        if s.startswith(" ") and self.add_space_prefix:
            s = s[1:]
        return s


# --------------------------------------------------------------------------
# Quantization (container block formats)
# --------------------------------------------------------------------------

def round_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize_q8_0(w):
    """Returns (bytes, dequantized float32 array of the same shape)."""
    flat = w.astype(np.float32).reshape(-1, 32)
    blob = bytearray()
    deq = np.zeros_like(flat)
    for i, block in enumerate(flat):
        amax = np.abs(block).max()
        d = np.float32(amax / 127.0) if amax > 0 else np.float32(0.0)
        q = np.zeros(32, dtype=np.int8) if d == 0 else np.clip(
            round_away(block / d), -127, 127).astype(np.int8)
        d16 = np.float16(d)
        blob += d16.tobytes() + q.tobytes()
        deq[i] = np.float32(d16) * q.astype(np.float32)
    return bytes(blob), deq.reshape(w.shape)


def quantize_q4_0(w):
    flat = w.astype(np.float32).reshape(-1, 32)
    blob = bytearray()
    deq = np.zeros_like(flat)
    for i, block in enumerate(flat):
        idx = np.abs(block).argmax()
        maxv = block[idx]
        d = np.float32(maxv / -8.0) if maxv != 0 else np.float32(0.0)
        if d == 0:
            q = np.full(32, 8, dtype=np.uint8)
        else:
            q = np.clip(np.floor(block / d + np.float32(8.5)), 0, 15).astype(np.uint8)
        d16 = np.float16(d)
        packed = bytes((q[j] | (q[j + 16] << 4)) for j in range(16))
        blob += d16.tobytes() + packed
        deq[i] = np.float32(d16) * (q.astype(np.float32) - 8.0)
    return bytes(blob), deq.reshape(w.shape)


def encode_f16(w):
    w16 = w.astype(np.float16)
    return w16.tobytes(), w16.astype(np.float32)


# --------------------------------------------------------------------------
# GGUF writer
# --------------------------------------------------------------------------

T_U32, T_F32, T_BOOL, T_STR, T_ARR, T_I32 = 4, 6, 7, 8, 9, 5
GG_F32, GG_F16, GG_Q4_0, GG_Q8_0 = 0, 1, 2, 8


def gg_string(s):
    b = s.encode("utf-8")
    return struct.pack("<Q", len(b)) + b


def gg_kv(key, vtype, value):
    out = gg_string(key) + struct.pack("<I", vtype)
    if vtype == T_U32:
        out += struct.pack("<I", value)
    elif vtype == T_I32:
        out += struct.pack("<i", value)
    elif vtype == T_F32:
        out += struct.pack("<f", value)
    elif vtype == T_BOOL:
        out += struct.pack("<B", 1 if value else 0)
    elif vtype == T_STR:
        out += gg_string(value)
    else:
        raise ValueError(vtype)
    return out


def gg_kv_array(key, elem_type, values):
    out = gg_string(key) + struct.pack("<I", T_ARR)
    out += struct.pack("<I", elem_type) + struct.pack("<Q", len(values))
    for v in values:
        if elem_type == T_STR:
            out += gg_string(v)
        elif elem_type == T_F32:
            out += struct.pack("<f", v)
        elif elem_type == T_I32:
            out += struct.pack("<i", v)
        else:
            raise ValueError(elem_type)
    return out


def write_gguf(path, metadata_blob, n_kv, tensors):
    """tensors: list of (name, shape_ne, ggml_type, data_bytes)."""
    align = 32
    header = struct.pack("<IIQQ", 0x46554747, 3, len(tensors), n_kv)
    infos = b""
    offset = 0
    for name, ne, gtype, data in tensors:
        infos += gg_string(name) + struct.pack("<I", len(ne))
        for d in ne:
            infos += struct.pack("<Q", d)
        infos += struct.pack("<I", gtype) + struct.pack("<Q", offset)
        offset += (len(data) + align - 1) // align * align
    head = header + metadata_blob + infos
    pad = (-len(head)) % align
    blob = bytearray(head + b"\x00" * pad)
    for _, _, _, data in tensors:
        blob += data
        blob += b"\x00" * ((-len(data)) % align)
    Path(path).write_bytes(bytes(blob))


# --------------------------------------------------------------------------
# Reference forward pass (token-by-token, mirrors the per-token C++ path)
# --------------------------------------------------------------------------

class Model:
    def __init__(self, weights, hp):
        self.w = weights
        self.hp = hp

    def rms_norm(self, x, w):
        ms = np.float32(np.mean(x.astype(np.float64) ** 2))
        inv = np.float32(1.0) / np.sqrt(ms + np.float32(self.hp["eps"]))
        return (x * inv * w).astype(np.float32)

    def rope(self, v, heads, pos):
        v = v.copy()
        hd, rd = self.hp["head_dim"], self.hp["rope_dim"]
        for h in range(heads):
            for i in range(rd // 2):
                theta = float(pos) * float(self.hp["rope_base"]) ** (-2.0 * i / rd)
                c = np.float32(np.cos(theta))
                s = np.float32(np.sin(theta))
                a = v[h * hd + 2 * i]
                b = v[h * hd + 2 * i + 1]
                v[h * hd + 2 * i] = a * c - b * s
                v[h * hd + 2 * i + 1] = a * s + b * c
        return v

    def forward(self, ids):
        """Returns (per-site states for every position, final logits)."""
        hp, w = self.hp, self.w
        nb, nh, nkv, hd = hp["blocks"], hp["heads"], hp["kv_heads"], hp["head_dim"]
        scale = np.float32(1.0 / np.sqrt(hd))
        group = nh // nkv
        K = [np.zeros((len(ids), nkv * hd), np.float32) for _ in range(nb)]
        V = [np.zeros((len(ids), nkv * hd), np.float32) for _ in range(nb)]
        sites = [[] for _ in range(nb + 1)]
        logits = None
        for pos, tok in enumerate(ids):
            h = w["embed"][tok].copy()
            for b in range(nb):
                sites[b].append(h.copy())
                blk = w["blk"][b]
                a = self.rms_norm(h, blk["attn_norm"])
                q = self.rope(blk["wq"] @ a, nh, pos)
                k = self.rope(blk["wk"] @ a, nkv, pos)
                v = blk["wv"] @ a
                K[b][pos] = k
                V[b][pos] = v
                attn = np.zeros(nh * hd, np.float32)
                for hh in range(nh):
                    kv = hh // group
                    qh = q[hh * hd:(hh + 1) * hd]
                    sc = np.zeros(pos + 1, np.float32)
                    for t in range(pos + 1):
                        sc[t] = scale * np.float32(
                            np.dot(qh, K[b][t][kv * hd:(kv + 1) * hd]))
                    m = sc.max()
                    ex = np.exp(sc - m).astype(np.float32)
                    z = ex.astype(np.float64).sum()
                    acc = np.zeros(hd, np.float32)
                    for t in range(pos + 1):
                        acc += np.float32(ex[t] / np.float32(z)) * \
                            V[b][t][kv * hd:(kv + 1) * hd]
                    attn[hh * hd:(hh + 1) * hd] = acc
                h = h + blk["wo"] @ attn
                n2 = self.rms_norm(h, blk["ffn_norm"])
                g = blk["gate"] @ n2
                u = blk["up"] @ n2
                act = (g / (np.float32(1.0) + np.exp(-g)) * u).astype(np.float32)
                h = h + blk["down"] @ act
            sites[nb].append(h.copy())
            logits = w["wout"] @ self.rms_norm(h, w["output_norm"])
        return sites, logits


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    pieces = build_vocab()
    tok = Tokenizer(pieces)
    n_vocab = len(pieces)

    hp = dict(embd=32, blocks=2, heads=4, kv_heads=2, head_dim=8, rope_dim=8,
              ff=48, ctx=256, eps=1e-5, rope_base=10000.0)

    rng = np.random.default_rng(20260816)

    def mat(rows, cols, scale=0.08):
        return (rng.standard_normal((rows, cols)) * scale).astype(np.float32)

    def normv(n):
        return (1.0 + rng.standard_normal(n) * 0.02).astype(np.float32)

    kvd = hp["kv_heads"] * hp["head_dim"]
    raw = dict(
        embed=mat(n_vocab, hp["embd"], 0.1),
        wout=mat(n_vocab, hp["embd"], 0.1),
        output_norm=normv(hp["embd"]),
        blk=[dict(attn_norm=normv(hp["embd"]),
                  wq=mat(hp["embd"], hp["embd"]),
                  wk=mat(kvd, hp["embd"]),
                  wv=mat(kvd, hp["embd"]),
                  wo=mat(hp["embd"], hp["embd"]),
                  ffn_norm=normv(hp["embd"]),
                  gate=mat(hp["ff"], hp["embd"]),
                  up=mat(hp["ff"], hp["embd"]),
                  down=mat(hp["embd"], hp["ff"]))
             for _ in range(hp["blocks"])],
    )

    # Quantize selected tensors; the reference model uses the dequantized
    # values so both implementations read identical weights.
    q8_bytes, raw["blk"][0]["wq"] = quantize_q8_0(raw["blk"][0]["wq"])
    f16_bytes, raw["blk"][0]["wk"] = encode_f16(raw["blk"][0]["wk"])
    q4_bytes, raw["blk"][1]["gate"] = quantize_q4_0(raw["blk"][1]["gate"])

    model = Model(raw, hp)

    # ---- container ----------------------------------------------------
    meta = b""
    n_kv = 0

    def kv(blob_piece):
        nonlocal meta, n_kv
        meta += blob_piece
        n_kv += 1

    kv(gg_kv("general.architecture", T_STR, "llama"))
    kv(gg_kv("general.name", T_STR, "tiny-test"))
    kv(gg_kv("general.alignment", T_U32, 32))
    kv(gg_kv("llama.block_count", T_U32, hp["blocks"]))
    kv(gg_kv("llama.context_length", T_U32, hp["ctx"]))
    kv(gg_kv("llama.embedding_length", T_U32, hp["embd"]))
    kv(gg_kv("llama.feed_forward_length", T_U32, hp["ff"]))
    kv(gg_kv("llama.attention.head_count", T_U32, hp["heads"]))
    kv(gg_kv("llama.attention.head_count_kv", T_U32, hp["kv_heads"]))
    kv(gg_kv("llama.attention.layer_norm_rms_epsilon", T_F32, hp["eps"]))
    kv(gg_kv("llama.rope.freq_base", T_F32, hp["rope_base"]))
    kv(gg_kv("llama.rope.dimension_count", T_U32, hp["rope_dim"]))
    kv(gg_kv("tokenizer.ggml.model", T_STR, "llama"))
    kv(gg_kv_array("tokenizer.ggml.tokens", T_STR, [p[0] for p in pieces]))
    kv(gg_kv_array("tokenizer.ggml.scores", T_F32, [p[1] for p in pieces]))
    kv(gg_kv_array("tokenizer.ggml.token_type", T_I32, [p[2] for p in pieces]))
    kv(gg_kv("tokenizer.ggml.bos_token_id", T_U32, 1))
    kv(gg_kv("tokenizer.ggml.eos_token_id", T_U32, 2))
    kv(gg_kv("tokenizer.ggml.unknown_token_id", T_U32, 0))
    kv(gg_kv("tokenizer.ggml.add_bos_token", T_BOOL, True))
    kv(gg_kv("tokenizer.ggml.add_space_prefix", T_BOOL, True))

    def f32_tensor(w):
        return w.astype("<f4").tobytes()

    tensors = [
        ("token_embd.weight", [hp["embd"], n_vocab], GG_F32, f32_tensor(raw["embed"])),
        ("output.weight", [hp["embd"], n_vocab], GG_F32, f32_tensor(raw["wout"])),
        ("output_norm.weight", [hp["embd"]], GG_F32, f32_tensor(raw["output_norm"])),
    ]
    for b in range(hp["blocks"]):
        blk = raw["blk"][b]
        p = "blk.%d." % b
        if b == 0:
            q_entry = (p + "attn_q.weight", [hp["embd"], hp["embd"]], GG_Q8_0, q8_bytes)
            k_entry = (p + "attn_k.weight", [hp["embd"], kvd], GG_F16, f16_bytes)
            gate_entry = (p + "ffn_gate.weight", [hp["embd"], hp["ff"]], GG_F32,
                          f32_tensor(blk["gate"]))
        else:
            q_entry = (p + "attn_q.weight", [hp["embd"], hp["embd"]], GG_F32,
                       f32_tensor(blk["wq"]))
            k_entry = (p + "attn_k.weight", [hp["embd"], kvd], GG_F32,
                       f32_tensor(blk["wk"]))
            gate_entry = (p + "ffn_gate.weight", [hp["embd"], hp["ff"]], GG_Q4_0,
                          q4_bytes)
        tensors += [
            (p + "attn_norm.weight", [hp["embd"]], GG_F32, f32_tensor(blk["attn_norm"])),
            q_entry, k_entry,
            (p + "attn_v.weight", [hp["embd"], kvd], GG_F32, f32_tensor(blk["wv"])),
            (p + "attn_output.weight", [hp["embd"], hp["embd"]], GG_F32,
             f32_tensor(blk["wo"])),
            (p + "ffn_norm.weight", [hp["embd"]], GG_F32, f32_tensor(blk["ffn_norm"])),
            gate_entry,
            (p + "ffn_up.weight", [hp["embd"], hp["ff"]], GG_F32, f32_tensor(blk["up"])),
            (p + "ffn_down.weight", [hp["ff"], hp["embd"]], GG_F32,
             f32_tensor(blk["down"])),
        ]

    write_gguf(out_dir / "tiny.gguf", meta, n_kv, tensors)

    # ---- reference outputs --------------------------------------------
    tokenizer_cases = []
    for text in ["Hello world", "the theater", "  two  spaces", "",
                 "answer: which group of people", "mixed CASE and [brackets]",
                 "unicode ü and ’ quote", "line\nbreak\ttab",
                 "<|user|>\nhi</s>", "ends with space "]:
        tokenizer_cases.append({"text": text, "ids": tok.encode(text),
                                "decoded": tok.decode(tok.encode(text))})

    template_cases = []
    for style, text in [("llama2", "Who is most likely?"),
                        ("zephyr", "Who is most likely?"),
                        ("chatml", "Pick one option."),
                        ("raw", "the group of people")]:
        if style == "llama2":
            wrapped = "[INST] " + text + " [/INST]"
        elif style == "zephyr":
            wrapped = "<|user|>\n" + text + "</s>\n<|assistant|>\n"
        elif style == "chatml":
            wrapped = "<|im_start|>user\n" + text + "<|im_end|>\n<|im_start|>assistant\n"
        else:
            wrapped = text
        template_cases.append({"style": style, "text": text,
                               "ids": [tok.bos] + tok.encode(wrapped)})

    logits_cases = []
    for text in ["the group of people",
                 "Which group is most responsible? answer now",
                 "a, b; or C?"]:
        ids = [tok.bos] + tok.encode(text)
        _, logits = model.forward(ids)
        logits_cases.append({"text": text, "ids": ids,
                             "logits": [float(x) for x in logits]})

    cap_text = "the answer is"
    cap_ids = [tok.bos] + tok.encode(cap_text)
    cap_sites, _ = model.forward(cap_ids)
    capture_case = {
        "text": cap_text, "ids": cap_ids,
        "last_token_sites": [[float(x) for x in site[-1]] for site in cap_sites],
    }

    greedy_text = "the most"
    greedy_ids = [tok.bos] + tok.encode(greedy_text)
    seq = list(greedy_ids)
    new_ids = []
    min_gap = float("inf")
    for _ in range(8):
        _, logits = model.forward(seq)
        order = np.argsort(-logits, kind="stable")
        gap = float(logits[order[0]] - logits[order[1]])
        min_gap = min(min_gap, gap)
        nxt = int(order[0])
        if nxt == tok.eos:
            break
        seq.append(nxt)
        new_ids.append(nxt)
    assert min_gap > 2e-2, f"greedy case too close to a tie: gap={min_gap}"
    greedy_case = {"text": greedy_text, "prompt_ids": greedy_ids,
                   "new_ids": new_ids, "decoded": tok.decode(new_ids),
                   "min_top2_gap": min_gap}

    reference = {
        "hyperparameters": hp,
        "n_vocab": n_vocab,
        "tokenizer_cases": tokenizer_cases,
        "template_cases": template_cases,
        "logits_cases": logits_cases,
        "capture_case": capture_case,
        "greedy_case": greedy_case,
    }
    (out_dir / "tiny_reference.json").write_text(
        json.dumps(reference, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out_dir / 'tiny.gguf'} ({(out_dir / 'tiny.gguf').stat().st_size} "
          f"bytes), vocab={n_vocab}, greedy min gap={min_gap:.4f}")


if __name__ == "__main__":
    main()
