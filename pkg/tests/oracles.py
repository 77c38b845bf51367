"""Independent brute-force oracles used to freeze expected test values.

Nothing here shares code with the library paths it checks: minimality is
by exhaustive enumeration of insertion vectors, BLEU by exact-fraction
counting, and decoding by recursive enumeration of every constrained
output sequence.
"""

from fractions import Fraction
from itertools import combinations_with_replacement
from math import exp, log

import numpy as np

from eagermt.neural_core import RecurrentState, forward_step, softmax


def feasible_under_insertions(links, insertions, start_pad):
    """Check i <= shifted position for every link, from first principles."""
    cum = 0
    positions = {}
    for u in range(1, len(insertions) + 1):
        cum += insertions[u - 1]
        positions[u] = start_pad + cum + u
    return all(i <= positions[j] for i, j in links)


def min_internal_eps_bruteforce(src_len, tgt_len, links, start_pad):
    """Minimal total insertions achieving feasibility, by enumeration.

    Enumerates every way of distributing T insertions over the tgt_len
    slots (just before each original target token), for T = 0, 1, 2, ...
    until some distribution is feasible.
    """
    for total in range(0, src_len + tgt_len + start_pad + 2):
        for combo in combinations_with_replacement(range(tgt_len), total):
            insertions = [0] * tgt_len
            for slot in combo:
                insertions[slot] += 1
            if feasible_under_insertions(links, insertions, start_pad):
                return total
    raise AssertionError("no feasible insertion vector found")


def _ngram_counts(tokens, n):
    counts = {}
    for k in range(len(tokens) - n + 1):
        gram = tuple(tokens[k:k + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu_manual(candidate_token_lists, reference_token_lists, max_order=4):
    """Corpus BLEU computed with exact fractions and explicit loops.

    Orders with zero candidate n-grams are excluded from the geometric
    mean; a zero precision at any included order gives 0.
    """
    matches = [0] * max_order
    totals = [0] * max_order
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidate_token_lists, reference_token_lists):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            c_counts = _ngram_counts(cand, n)
            r_counts = _ngram_counts(ref, n)
            for gram, count in c_counts.items():
                matches[n - 1] += min(count, r_counts.get(gram, 0))
                totals[n - 1] += count
    log_sum = 0.0
    n_orders = 0
    for n in range(max_order):
        if totals[n] == 0:
            continue
        n_orders += 1
        if matches[n] == 0:
            return 0.0
        log_sum += log(Fraction(matches[n], totals[n]))
    if n_orders == 0:
        return 0.0
    bp = 1.0 if cand_len >= ref_len else exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * exp(log_sum / n_orders)


def enumerate_decodings(params, src, cfg, eps_id, eos_id):
    """Every constrained output sequence with its exact cumulative logprob.

    Recursively walks the decode process: consume each source token, then
    (while injections remain) either inject a padding input or consume the
    source EOS, then pad inputs for at most max_extra_steps. The output at
    each step is every unmasked token; EOS is only available once the
    source EOS has been consumed, padding only while under the limit, and
    the first start_pad outputs are forced to padding. Returns a list of
    (tokens_tuple, logprob, spi_used) for every finished sequence.
    """
    results = []
    vocab = params.config.vocab_size

    def masked_logprobs(state, in_tok, prev_tok, allow_eos, allow_eps):
        logits, new_state = forward_step(params, state, in_tok, prev_tok)
        probs = softmax(logits[None, :])[0].copy()
        if not allow_eos:
            probs[eos_id] = 0.0
        if not allow_eps:
            probs[eps_id] = 0.0
        probs /= probs.sum()
        return probs, new_state

    def walk(state, cursor, spi_used, extra_used, out, logprob, eps_used, consumed_eos):
        step = len(out)
        if consumed_eos:
            input_choices = []
            if extra_used < cfg.max_extra_steps:
                input_choices.append(("extra", eps_id))
        elif cursor < len(src):
            input_choices = [("src", src[cursor])]
        else:
            input_choices = [("eos", eos_id)]
            if spi_used < cfg.spi:
                input_choices.append(("inject", eps_id))
        for kind, in_tok in input_choices:
            now_eos = consumed_eos or kind == "eos"
            prev_tok = out[-1] if out else eos_id
            allow_eps = eps_used < cfg.padding_limit or step < cfg.start_pad
            probs, new_state = masked_logprobs(state, in_tok, prev_tok, now_eos, allow_eps)
            if step < cfg.start_pad:
                choices = [eps_id]
            else:
                choices = [v for v in range(vocab) if probs[v] > 0.0]
            for v in choices:
                lp = logprob + float(np.log(probs[v]))
                new_out = out + [v]
                if v == eos_id:
                    results.append((tuple(new_out), lp, spi_used))
                    continue
                walk(
                    new_state,
                    cursor + 1 if kind == "src" else cursor,
                    spi_used + 1 if kind == "inject" else spi_used,
                    extra_used + 1 if kind == "extra" else extra_used,
                    new_out,
                    lp,
                    eps_used + (1 if v == eps_id and step >= cfg.start_pad else 0),
                    now_eos,
                )

    state0 = RecurrentState.zeros(params.config, 1)
    if cfg.boundary_warmup:
        _, state0 = forward_step(params, state0, eos_id, eos_id)
    walk(state0, 0, 0, 0, [], 0.0, 0, False)
    return results
