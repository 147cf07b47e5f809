from .cache import FdCache
from .encoding import (
    FILE_SUFFIX,
    Signature,
    decode_fd,
    encode_fd,
    encoded_size,
    fd_signature,
    load_fd,
    read_header,
    save_fd,
)
from .session import (
    DECISION_TIMEOUT,
    Phase,
    ReceiveOutcome,
    ReceiverServer,
    ReceiverSession,
    SenderSession,
    SendOutcome,
    receiver_session,
    sender_session,
)
from .wire import Frame, FrameStream, MsgType, parse_frames
