"""Local promotion: locals whose address is never taken become temporaries."""
import logging

import mast
from conv import chain
from matchers import MiniCMatcher
from simulation import PassOutput

LOGGER = logging.getLogger("refine.promotion")


class PromotionMatcher(MiniCMatcher):
    name = "promotion"


def _promote(fn: mast.FunctionDecl) -> mast.FunctionDecl:
    addressed = mast.addressed_names(fn)

    def promoted(v: mast.VarDecl) -> mast.VarDecl:
        return mast.VarDecl(v.token, v.name, v.type_, v.register or v.name not in addressed)

    params = [promoted(p) for p in fn.params]
    locals_ = [promoted(v) for v in fn.locals]
    moved = [v.name for v in fn.variables() if not v.register and v.name not in addressed]
    if moved:
        LOGGER.debug("%s: promoted %s", fn.name, ", ".join(moved))
    return mast.FunctionDecl(fn.token, fn.name, fn.result, params, locals_, fn.body)


def local_promotion(program: mast.Program) -> PassOutput:
    # Statements are shared with the input; only declarations change.
    declarations = [_promote(d) if isinstance(d, mast.FunctionDecl) else d
                    for d in program.declarations]
    return PassOutput("promotion", mast.Program(declarations), chain(["c_injp"]), PromotionMatcher())
