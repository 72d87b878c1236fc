import textwrap

from .context import get_env, get_run


def show_help_menu() -> None:
    """
    Display a list of supported commands the agent can respond to.
    This is shown when the user types `help`.
    """

    scenario = get_run().scenario.name
    help_text = textwrap.dedent(f"""
        **Capacity Adequacy Agent Commands** (scenario `{scenario}`)

        __Risk__
        • what are LOLE and EEU of the system?
        • how much firm capacity meets LOLE <k> h?
        • how much firm capacity meets EEU <k> MWh?

        __Capacity Value__
        • show the capacity value of every offer (EEU or LOLE)

        __Auction__
        • clear the auction (naive | fixedpoint | clock | demandcurve)
        • clear the auction with a lumpy-offer recheck

        __Diagnostics__
        • run the continuity scan
        • run the smoothness grid
        • estimate the sampling noise floor
        • compare dispatch policies on the deepest shortfall day

        __Economics__
        • show the economic optimum and the CONE/VOLL pivot
    """)

    get_env().add_reply(help_text)
