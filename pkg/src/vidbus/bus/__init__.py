from vidbus.bus.router import (
    Ack,
    Bus,
    EndpointBinding,
    Envelope,
    ExchangePattern,
    check_address,
)

# Named in-process queues: vm://<name> -> handler
NAMED_QUEUES = {
    "query": "lookup_user",
    "login": "login",
    "search": "search",
    "get_params": "get_params",
    "list_sources": "list_sources",
    "add_source": "add_source",
    "update_source": "update_source",
    "add_user": "add_user",
}


def vm_bindings() -> list[EndpointBinding]:
    return [EndpointBinding(f"vm://{name}", handler) for name, handler in NAMED_QUEUES.items()]


__all__ = [
    "Ack",
    "Bus",
    "EndpointBinding",
    "Envelope",
    "ExchangePattern",
    "NAMED_QUEUES",
    "check_address",
    "vm_bindings",
]
