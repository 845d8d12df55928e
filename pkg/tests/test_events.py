"""Progress topics and the dispatcher behind them."""

from hydroswitch.core.events import EventTopic, emit_event, subscribe_event, subscribed
from hydroswitch.infra.events import Dispatcher


def test_subscribe_and_unsubscribe():
    seen = []
    unsubscribe = subscribe_event(EventTopic.ITERATION_COMPLETED, seen.append)
    assert emit_event(EventTopic.ITERATION_COMPLETED, {"iteration": 1}) == 1
    unsubscribe()
    assert emit_event(EventTopic.ITERATION_COMPLETED, {"iteration": 2}) == 0
    assert seen == [{"iteration": 1}]


def test_subscribed_block_detaches_on_error():
    seen = []
    try:
        with subscribed({EventTopic.RUN_FINISHED: seen.append, EventTopic.STEP_COMPLETED: seen.append}):
            emit_event(EventTopic.RUN_FINISHED, "run")
            raise KeyError("stop")
    except KeyError:
        pass
    emit_event(EventTopic.STEP_COMPLETED, "step")
    assert seen == ["run"]


def test_failing_handler_does_not_stop_others():
    dispatcher = Dispatcher()
    seen = []

    def broken(payload):
        raise RuntimeError("boom")

    dispatcher.connect("step", broken)
    dispatcher.connect("step", seen.append)
    assert dispatcher.publish("step", 7) == 1
    assert seen == [7]


def test_duplicate_connection_is_ignored():
    dispatcher = Dispatcher()
    seen = []
    disconnect = dispatcher.connect("run", seen.append)
    dispatcher.connect("run", seen.append)
    dispatcher.publish("run", "done")
    disconnect()
    assert dispatcher.publish("run", "again") == 0
    assert seen == ["done"]


def test_handler_may_disconnect_itself():
    dispatcher = Dispatcher()
    calls = []

    def once(payload):
        calls.append(payload)
        disconnect()

    disconnect = dispatcher.connect("iteration", once)
    dispatcher.publish("iteration", 1)
    dispatcher.publish("iteration", 2)
    assert calls == [1]
